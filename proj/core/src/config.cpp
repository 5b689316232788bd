#include "ggsa/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ggsa/error.hpp"

namespace ggsa {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("config: '" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + s + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config: '" + std::string(key) + "' expects 0/1, got '" + std::string(v) + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kGlobal: return "global";
    case Variant::kGgsa: return "ggsa";
    case Variant::kIggsa: return "iggsa";
  }
  return "?";
}

std::string to_string(Composition c) { return c == Composition::kMaxPool ? "maxpool" : "attention"; }

std::string to_string(Precision p) { return p == Precision::kSingle ? "single" : "double"; }

Variant parse_variant(std::string_view s) {
  if (s == "global") return Variant::kGlobal;
  if (s == "ggsa") return Variant::kGgsa;
  if (s == "iggsa") return Variant::kIggsa;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected global, ggsa or iggsa)");
}

Composition parse_composition(std::string_view s) {
  if (s == "maxpool") return Composition::kMaxPool;
  if (s == "attention") return Composition::kAttention;
  throw ConfigError("unknown composition '" + std::string(s) + "' (expected maxpool or attention)");
}

Precision parse_precision(std::string_view s) {
  if (s == "single") return Precision::kSingle;
  if (s == "double") return Precision::kDouble;
  throw ConfigError("unknown precision '" + std::string(s) + "' (expected single or double)");
}

std::vector<std::size_t> ModelConfig::resolved_offsets() const {
  if (!offsets.empty()) return offsets;
  std::vector<std::size_t> out(heads, 0);
  for (std::size_t h = heads / 2; h < heads; ++h) out[h] = group_size / 2;
  return out;
}

void ModelConfig::validate() const {
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (heads == 0 || embed_dim % heads != 0)
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " is not divisible by heads " + std::to_string(heads));
  if (group_size == 0) throw ConfigError("group_size must be positive");
  if (!offsets.empty() && offsets.size() != heads)
    throw ConfigError("offsets lists " + std::to_string(offsets.size()) + " values for " + std::to_string(heads) +
                      " heads");
  for (std::size_t o : resolved_offsets())
    if (o >= group_size)
      throw ConfigError("offset " + std::to_string(o) + " must be below group_size " + std::to_string(group_size));
  if (blocks == 0) throw ConfigError("blocks must be at least 1");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("keep_prob must lie in (0, 1]");
  if (max_question_len == 0 || max_answer_len == 0) throw ConfigError("maximum lengths must be positive");
  if (scale && !(*scale > 0.0)) throw ConfigError("scale override must be positive");
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
}

std::string to_text(const ModelConfig& cfg) {
  std::ostringstream out;
  std::string offsets;
  for (std::size_t i = 0; i < cfg.offsets.size(); ++i) offsets += (i ? "," : "") + std::to_string(cfg.offsets[i]);
  out << "embed_dim=" << cfg.embed_dim << "\n"
      << "heads=" << cfg.heads << "\n"
      << "group_size=" << cfg.group_size << "\n"
      << "offsets=" << offsets << "\n"
      << "blocks=" << cfg.blocks << "\n"
      << "ffn_width=" << cfg.ffn_width << "\n"
      << "keep_prob=" << format_double(cfg.keep_prob) << "\n"
      << "max_question_len=" << cfg.max_question_len << "\n"
      << "max_answer_len=" << cfg.max_answer_len << "\n"
      << "scale=" << (cfg.scale ? format_double(*cfg.scale) : "") << "\n"
      << "precision=" << to_string(cfg.precision) << "\n"
      << "seed=" << cfg.seed << "\n"
      << "vocab_size=" << cfg.vocab_size << "\n"
      << "gate=" << (cfg.gate ? 1 : 0) << "\n"
      << "variant=" << to_string(cfg.variant) << "\n"
      << "composition=" << to_string(cfg.composition) << "\n"
      << "attention_width=" << cfg.attention_width << "\n"
      << "scorer_width=" << cfg.scorer_width << "\n";
  return out.str();
}

void set_config_value(ModelConfig& cfg, std::string_view key, std::string_view value) {
  using Size = std::size_t;
  if (key == "embed_dim") cfg.embed_dim = parse_int<Size>(key, value);
  else if (key == "heads") cfg.heads = parse_int<Size>(key, value);
  else if (key == "group_size") cfg.group_size = parse_int<Size>(key, value);
  else if (key == "offsets") {
    cfg.offsets.clear();
    while (!value.empty()) {
      const auto comma = value.find(',');
      cfg.offsets.push_back(parse_int<Size>(key, trim(value.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      value.remove_prefix(comma + 1);
    }
  } else if (key == "blocks") cfg.blocks = parse_int<Size>(key, value);
  else if (key == "ffn_width") cfg.ffn_width = parse_int<Size>(key, value);
  else if (key == "keep_prob") cfg.keep_prob = parse_double(key, value);
  else if (key == "max_question_len") cfg.max_question_len = parse_int<Size>(key, value);
  else if (key == "max_answer_len") cfg.max_answer_len = parse_int<Size>(key, value);
  else if (key == "scale") {
    if (value.empty()) cfg.scale.reset();
    else cfg.scale = parse_double(key, value);
  } else if (key == "precision") cfg.precision = parse_precision(value);
  else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "vocab_size") cfg.vocab_size = parse_int<Size>(key, value);
  else if (key == "gate") cfg.gate = parse_bool(key, value);
  else if (key == "variant") cfg.variant = parse_variant(value);
  else if (key == "composition") cfg.composition = parse_composition(value);
  else if (key == "attention_width") cfg.attention_width = parse_int<Size>(key, value);
  else if (key == "scorer_width") cfg.scorer_width = parse_int<Size>(key, value);
  else throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

ModelConfig parse_config(std::string_view text, ModelConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

ModelConfig load_config_file(const std::filesystem::path& path, ModelConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

}  // namespace ggsa
