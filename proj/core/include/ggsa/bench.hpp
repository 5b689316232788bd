#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ggsa {

enum class AttentionKind { kGlobal, kGroup, kLocal };

std::string to_string(AttentionKind k);
AttentionKind parse_attention_kind(std::string_view s);

// Multiply-add counts of one multi-head attention forward. `core` covers
// Q^T.K and V.weights; `projection` covers the four D x D projections and is
// the same for every kind. Local-window attention is counted as executed
// (full L x L products under a mask).
struct FlopModel {
  AttentionKind kind = AttentionKind::kGlobal;
  std::size_t length = 0, dim = 0, heads = 0, group_size = 0;
  std::vector<std::size_t> offsets;
  std::uint64_t core = 0;
  std::uint64_t projection = 0;
};

// Throws ConfigError for zero sizes, D not divisible by n, or offsets that do
// not fit the group size. Empty offsets mean all zero.
FlopModel flop_count(std::size_t length, std::size_t dim, std::size_t heads, std::size_t group_size,
                     AttentionKind kind, std::vector<std::size_t> offsets = {});

// Core FLOP ratio global / kind at the same sizes.
double core_ratio(const FlopModel& global, const FlopModel& other);

struct BenchReport {
  AttentionKind kind = AttentionKind::kGlobal;
  std::size_t length = 0, dim = 0, heads = 0, group_size = 0;
  std::size_t window = 0;  // local-window width, 0 otherwise
  std::uint64_t flops_core = 0;
  double median_seconds = 0.0;
  std::size_t reps = 0;
  std::size_t warmups = 0;
  std::string note;

  bool operator==(const BenchReport&) const = default;
};

inline constexpr std::string_view kBenchCsvHeader = "variant,L,D,n,l,flops_core,median_seconds,reps";

std::string to_csv_row(const BenchReport& r);
// Space-separated key=value pairs on one line; `note` comes last and runs to
// the end of the line.
std::string to_record(const BenchReport& r);
BenchReport parse_record(std::string_view line);

struct BenchOptions {
  std::vector<std::size_t> lengths{250, 500, 1000, 2000};
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t group_size = 10;
  std::size_t window = 0;  // 0: group_size, raised to the next odd number
  std::vector<AttentionKind> kinds{AttentionKind::kGlobal, AttentionKind::kGroup, AttentionKind::kLocal};
  std::size_t reps = 9;
  std::size_t warmups = 2;
  std::uint64_t seed = 1;
  std::string note;
};

std::size_t resolved_window(const BenchOptions& opt);

// Times single-precision forward passes of each kind on identical random
// inputs per length; parameter and input generation are not timed.
std::vector<BenchReport> bench_attention(const BenchOptions& opt);

double median(std::vector<double> values);

}  // namespace ggsa
