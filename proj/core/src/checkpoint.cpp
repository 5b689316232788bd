#include "ggsa/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ggsa/error.hpp"

namespace ggsa {
namespace {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const std::string& in, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::uint32_t crc_of(const std::string& bytes, std::size_t len) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

  void need(std::size_t n, const char* what) const {
    if (n > remaining()) throw TruncatedError(std::string("checkpoint truncated while reading ") + what);
  }
  template <typename U>
  U take(const char* what) {
    need(sizeof(U), what);
    const U v = get_le<U>(bytes_, pos_);
    pos_ += sizeof(U);
    return v;
  }
  std::string take_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

// Element width declared by the config text, read before the text is trusted.
std::size_t element_width(const std::string& config_text) {
  return config_text.find("\nprecision=double") != std::string::npos ||
                 config_text.rfind("precision=double", 0) == 0
             ? 8
             : 4;
}

void check_architecture(const ModelConfig& stored, const ModelConfig& req) {
  auto conflict = [](const char* field, const std::string& a, const std::string& b) {
    throw ConfigConflictError(std::string("checkpoint ") + field + " is " + a + " but " + b + " was requested");
  };
  auto num = [](std::size_t v) { return std::to_string(v); };
  if (stored.embed_dim != req.embed_dim) conflict("embed_dim", num(stored.embed_dim), num(req.embed_dim));
  if (stored.heads != req.heads) conflict("heads", num(stored.heads), num(req.heads));
  if (stored.group_size != req.group_size) conflict("group_size", num(stored.group_size), num(req.group_size));
  if (stored.resolved_offsets() != req.resolved_offsets()) conflict("offsets", "different", "other offsets");
  if (stored.blocks != req.blocks) conflict("blocks", num(stored.blocks), num(req.blocks));
  if (stored.resolved_ffn_width() != req.resolved_ffn_width())
    conflict("ffn_width", num(stored.resolved_ffn_width()), num(req.resolved_ffn_width()));
  if (stored.vocab_size != req.vocab_size) conflict("vocab_size", num(stored.vocab_size), num(req.vocab_size));
  if (stored.resolved_attention_width() != req.resolved_attention_width())
    conflict("attention_width", num(stored.resolved_attention_width()), num(req.resolved_attention_width()));
  if (stored.resolved_scorer_width() != req.resolved_scorer_width())
    conflict("scorer_width", num(stored.resolved_scorer_width()), num(req.resolved_scorer_width()));
  if (stored.precision != req.precision)
    conflict("precision", to_string(stored.precision), to_string(req.precision));
  if (stored.variant != req.variant) conflict("variant", to_string(stored.variant), to_string(req.variant));
  if (stored.composition != req.composition)
    conflict("composition", to_string(stored.composition), to_string(req.composition));
  if (stored.gate != req.gate) conflict("gate", stored.gate ? "on" : "off", req.gate ? "on" : "off");
}

}  // namespace

template <typename T>
std::string encode_checkpoint(const ModelConfig& cfg, const EncoderParams<T>& params) {
  if ((cfg.precision == Precision::kDouble) != (sizeof(T) == 8))
    throw ContractError("checkpoint: parameter precision does not match config precision");
  std::string out(kCheckpointMagic, 8);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string text = to_text(cfg);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const Parameter<T>* p : params.all()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    const Shape& s = p->value.shape();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.rank()));
    for (std::size_t i = 0; i < s.rank(); ++i) put_le<std::uint64_t>(out, s[i]);
    for (std::size_t i = 0; i < p->value.size(); ++i) put_le<Bits<T>>(out, std::bit_cast<Bits<T>>(p->value[i]));
  }
  put_le<std::uint32_t>(out, crc_of(out, out.size()));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8) throw TruncatedError("checkpoint shorter than its magic");
  if (bytes.compare(0, 8, kCheckpointMagic, 8) != 0) throw FormatError("not a checkpoint (bad magic)");
  if (bytes.size() < 8 + 4) throw TruncatedError("checkpoint truncated while reading version");
  const std::uint32_t version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  if (bytes.size() < 8 + 4 + 4) throw TruncatedError("checkpoint truncated before its checksum");
  const std::size_t body_end = bytes.size() - 4;
  Reader r(bytes, body_end);
  r.take_bytes(12, "header");
  const std::uint64_t text_len = r.take<std::uint64_t>("config length");
  const std::string text = r.take_bytes(text_len, "config");
  const std::size_t width = element_width(text);

  std::vector<CheckpointRecord> records;
  while (r.remaining() > 0) {
    CheckpointRecord rec;
    rec.name = r.take_bytes(r.take<std::uint32_t>("name length"), "name");
    const std::uint32_t rank = r.take<std::uint32_t>("rank");
    if (rank < 1 || rank > 3) throw FormatError("record '" + rec.name + "' has invalid rank " + std::to_string(rank));
    std::vector<std::size_t> extents;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint64_t e = r.take<std::uint64_t>("extent");
      if (e == 0 || e > r.remaining()) throw TruncatedError("record '" + rec.name + "' declares more data than present");
      extents.push_back(e);
      count *= e;
      if (count > r.remaining()) throw TruncatedError("record '" + rec.name + "' declares more data than present");
    }
    rec.payload = r.take_bytes(count * width, "payload");
    rec.shape = Shape(extents);
    records.push_back(std::move(rec));
  }

  const std::uint32_t stored = get_le<std::uint32_t>(bytes, body_end);
  const std::uint32_t actual = crc_of(bytes, body_end);
  if (stored != actual) throw ChecksumError("checkpoint checksum mismatch");

  Checkpoint ckpt;
  try {
    ckpt.config = parse_config(text);
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config is invalid: ") + e.what());
  }
  ckpt.records = std::move(records);
  return ckpt;
}

template <typename T>
EncoderParams<T> checkpoint_params(const Checkpoint& ckpt, const ModelConfig* requested) {
  if (requested) check_architecture(ckpt.config, *requested);
  if ((ckpt.config.precision == Precision::kDouble) != (sizeof(T) == 8))
    throw ConfigConflictError("checkpoint precision " + to_string(ckpt.config.precision) +
                              " does not match the requested numeric type");
  EncoderParams<T> params = EncoderParams<T>::init(ckpt.config);
  auto all = params.all();
  if (all.size() != ckpt.records.size())
    throw FormatError("checkpoint holds " + std::to_string(ckpt.records.size()) + " arrays, config expects " +
                      std::to_string(all.size()));
  for (std::size_t k = 0; k < all.size(); ++k) {
    const CheckpointRecord& rec = ckpt.records[k];
    Parameter<T>& p = *all[k];
    if (rec.name != p.name) throw FormatError("expected array '" + p.name + "', found '" + rec.name + "'");
    if (rec.shape != p.value.shape())
      throw FormatError("array '" + p.name + "' has shape " + rec.shape.str() + ", config expects " +
                        p.value.shape().str());
    for (std::size_t i = 0; i < p.value.size(); ++i)
      p.value[i] = std::bit_cast<T>(get_le<Bits<T>>(rec.payload, i * sizeof(T)));
  }
  return params;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg, const EncoderParams<T>& params) {
  const std::string bytes = encode_checkpoint(cfg, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

template std::string encode_checkpoint<float>(const ModelConfig&, const EncoderParams<float>&);
template std::string encode_checkpoint<double>(const ModelConfig&, const EncoderParams<double>&);
template EncoderParams<float> checkpoint_params<float>(const Checkpoint&, const ModelConfig*);
template EncoderParams<double> checkpoint_params<double>(const Checkpoint&, const ModelConfig*);
template void save_checkpoint<float>(const std::filesystem::path&, const ModelConfig&, const EncoderParams<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ModelConfig&, const EncoderParams<double>&);

}  // namespace ggsa
