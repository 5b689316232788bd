#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ggsa/tensor.hpp"

namespace ggsa {

enum class Variant { kGlobal, kGgsa, kIggsa };
enum class Composition { kMaxPool, kAttention };

std::string to_string(Variant v);
std::string to_string(Composition c);
std::string to_string(Precision p);
Variant parse_variant(std::string_view s);
Composition parse_composition(std::string_view s);
Precision parse_precision(std::string_view s);

// Architecture hyperparameters. Zero-valued widths and an empty offset list
// resolve to defaults (see the resolved_* accessors).
struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t heads = 4;
  std::size_t group_size = 4;
  std::vector<std::size_t> offsets;
  std::size_t blocks = 1;
  std::size_t ffn_width = 0;
  double keep_prob = 0.7;
  std::size_t max_question_len = 8;
  std::size_t max_answer_len = 12;
  std::optional<double> scale;
  Precision precision = Precision::kSingle;
  std::uint64_t seed = 1;
  std::size_t vocab_size = 300;
  bool gate = true;
  Variant variant = Variant::kGgsa;
  Composition composition = Composition::kMaxPool;
  std::size_t attention_width = 0;
  std::size_t scorer_width = 0;

  std::size_t head_dim() const { return embed_dim / heads; }
  std::size_t resolved_ffn_width() const { return ffn_width ? ffn_width : 4 * embed_dim; }
  std::size_t resolved_attention_width() const { return attention_width ? attention_width : embed_dim; }
  std::size_t resolved_scorer_width() const { return scorer_width ? scorer_width : embed_dim; }
  // Explicit offsets, or 0 for the first half of the heads and group_size / 2
  // for the rest.
  std::vector<std::size_t> resolved_offsets() const;

  // Throws ConfigError on any violated invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Canonical text: one `key=value` per line, fixed key order, LF endings,
// doubles printed with round-trip precision.
std::string to_text(const ModelConfig& cfg);

// Applies `key=value` lines on top of `base`. Blank lines and `#` comments are
// skipped; unknown keys and malformed values raise ConfigError.
ModelConfig parse_config(std::string_view text, ModelConfig base = {});

ModelConfig load_config_file(const std::filesystem::path& path, ModelConfig base = {});

// Applies a single key=value assignment.
void set_config_value(ModelConfig& cfg, std::string_view key, std::string_view value);

}  // namespace ggsa
