#include "ggsa/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <map>

#include "ggsa/attention.hpp"
#include "ggsa/error.hpp"
#include "ggsa/random.hpp"

namespace ggsa {

std::string to_string(AttentionKind k) {
  switch (k) {
    case AttentionKind::kGlobal: return "global";
    case AttentionKind::kGroup: return "group";
    case AttentionKind::kLocal: return "local";
  }
  return "?";
}

AttentionKind parse_attention_kind(std::string_view s) {
  if (s == "global") return AttentionKind::kGlobal;
  if (s == "group") return AttentionKind::kGroup;
  if (s == "local") return AttentionKind::kLocal;
  throw ConfigError("unknown attention kind '" + std::string(s) + "' (expected global, group or local)");
}

FlopModel flop_count(std::size_t length, std::size_t dim, std::size_t heads, std::size_t group_size,
                     AttentionKind kind, std::vector<std::size_t> offsets) {
  if (length == 0 || dim == 0 || heads == 0 || group_size == 0) throw ConfigError("flop_count: sizes must be positive");
  if (dim % heads != 0) throw ConfigError("flop_count: D is not divisible by n");
  if (offsets.empty()) offsets.assign(heads, 0);
  if (offsets.size() != heads) throw ConfigError("flop_count: one offset per head is required");
  FlopModel m{kind, length, dim, heads, group_size, offsets, 0, 0};
  const std::uint64_t d = dim / heads;
  const std::uint64_t len = length;
  m.projection = 4 * len * static_cast<std::uint64_t>(dim) * dim;
  if (kind == AttentionKind::kGroup) {
    for (std::size_t h = 0; h < heads; ++h)
      for (const auto& [lo, hi] : group_layout(length, group_size, offsets[h]).ranges) {
        const std::uint64_t g = hi - lo;
        m.core += 2 * d * g * g;
      }
  } else {
    m.core = 2 * len * len * dim;
  }
  return m;
}

double core_ratio(const FlopModel& global, const FlopModel& other) {
  return static_cast<double>(global.core) / static_cast<double>(other.core);
}

std::string to_csv_row(const BenchReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%zu,%llu,%.9g,%zu", to_string(r.kind).c_str(), r.length, r.dim,
                r.heads, r.group_size, static_cast<unsigned long long>(r.flops_core), r.median_seconds, r.reps);
  return buf;
}

std::string to_record(const BenchReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "variant=%s L=%zu D=%zu n=%zu l=%zu window=%zu flops_core=%llu median_seconds=%.17g reps=%zu "
                "warmups=%zu note=",
                to_string(r.kind).c_str(), r.length, r.dim, r.heads, r.group_size, r.window,
                static_cast<unsigned long long>(r.flops_core), r.median_seconds, r.reps, r.warmups);
  return buf + r.note;
}

BenchReport parse_record(std::string_view line) {
  std::map<std::string, std::string, std::less<>> kv;
  std::string note;
  while (!line.empty()) {
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("bench record: expected key=value");
    const std::string key(line.substr(0, eq));
    line.remove_prefix(eq + 1);
    if (key == "note") {
      note = std::string(line);
      break;
    }
    const auto sp = line.find(' ');
    kv[key] = std::string(line.substr(0, sp));
    line = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("bench record: missing ") + key);
    return it->second;
  };
  auto num = [&](const char* key) {
    const std::string& s = get(key);
    unsigned long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError(std::string("bench record: bad ") + key);
    return v;
  };
  BenchReport r;
  r.kind = parse_attention_kind(get("variant"));
  r.length = num("L");
  r.dim = num("D");
  r.heads = num("n");
  r.group_size = num("l");
  r.window = num("window");
  r.flops_core = num("flops_core");
  const std::string& sec = get("median_seconds");
  char* end = nullptr;
  r.median_seconds = std::strtod(sec.c_str(), &end);
  if (end != sec.c_str() + sec.size()) throw DataError("bench record: bad median_seconds");
  r.reps = num("reps");
  r.warmups = num("warmups");
  r.note = note;
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::size_t resolved_window(const BenchOptions& opt) {
  const std::size_t w = opt.window ? opt.window : opt.group_size;
  return w % 2 ? w : w + 1;
}

std::vector<BenchReport> bench_attention(const BenchOptions& opt) {
  if (opt.reps < 1) throw ConfigError("bench needs at least one repetition");
  const std::size_t window = resolved_window(opt);
  const std::vector<std::size_t> offsets(opt.heads, 0);
  std::vector<BenchReport> out;
  for (std::size_t len : opt.lengths) {
    Rng rng(opt.seed);
    AttentionParams<float> params = AttentionParams<float>::xavier(opt.dim, opt.heads, offsets, rng, "bench.");
    for (Parameter<float>* p : {&params.wq, &params.wk, &params.wv, &params.wo}) p->trainable = false;
    const Tensor<float> input = uniform_tensor<float>(Shape{opt.dim, len}, -1.0, 1.0, rng);
    const ValidMask valid(len, true);
    const float scale = static_cast<float>(attention_scale(opt.dim, opt.heads));
    for (AttentionKind kind : opt.kinds) {
      auto run = [&] {
        Tape<float> tape;
        Var<float> x = tape.constant(input);
        switch (kind) {
          case AttentionKind::kGlobal: multi_head_attention(x, params, valid, scale); break;
          case AttentionKind::kGroup: group_multi_head_attention(x, params, opt.group_size, valid, scale); break;
          case AttentionKind::kLocal: local_window_attention(x, params, window, valid, scale); break;
        }
      };
      for (std::size_t i = 0; i < opt.warmups; ++i) run();
      std::vector<double> times;
      for (std::size_t i = 0; i < opt.reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        run();
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
      BenchReport r;
      r.kind = kind;
      r.length = len;
      r.dim = opt.dim;
      r.heads = opt.heads;
      r.group_size = opt.group_size;
      r.window = kind == AttentionKind::kLocal ? window : 0;
      r.flops_core = flop_count(len, opt.dim, opt.heads, opt.group_size, kind).core;
      r.median_seconds = median(times);
      r.reps = opt.reps;
      r.warmups = opt.warmups;
      r.note = opt.note;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace ggsa
