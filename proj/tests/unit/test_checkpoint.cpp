#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ggsa/ggsa.hpp"

using namespace ggsa;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config(Precision precision) {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.heads = 2;
  cfg.vocab_size = 20;
  cfg.variant = Variant::kIggsa;
  cfg.composition = Composition::kAttention;
  cfg.precision = precision;
  cfg.seed = 4;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ggsa_test_ckpt";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename E>
void expect_load_error(const std::string& bytes) {
  const fs::path p = scratch("bad.ckpt");
  write_bytes(p, bytes);
  EXPECT_THROW(load_checkpoint(p), E);
}

template <typename T>
void expect_bit_exact(const EncoderParams<T>& a, const EncoderParams<T>& b) {
  auto pa = a.all(), pb = b.all();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value.shape(), pb[i]->value.shape());
    EXPECT_TRUE(std::equal(pa[i]->value.data().begin(), pa[i]->value.data().end(), pb[i]->value.data().begin()));
  }
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdenticalInBothPrecisions) {
  {
    const auto cfg = small_config(Precision::kSingle);
    const auto params = EncoderParams<float>::init(cfg);
    const fs::path a = scratch("a32.ckpt"), b = scratch("b32.ckpt");
    save_checkpoint(a, cfg, params);
    const Checkpoint ck = load_checkpoint(a);
    EXPECT_EQ(ck.config, cfg);
    const auto back = checkpoint_params<float>(ck, &cfg);
    expect_bit_exact(params, back);
    save_checkpoint(b, ck.config, back);
    EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
  }
  {
    const auto cfg = small_config(Precision::kDouble);
    const auto params = EncoderParams<double>::init(cfg);
    const std::string bytes = encode_checkpoint(cfg, params);
    const Checkpoint ck = decode_checkpoint(bytes);
    const auto back = checkpoint_params<double>(ck);
    expect_bit_exact(params, back);
    EXPECT_EQ(encode_checkpoint(ck.config, back), bytes);
  }
}

TEST(Checkpoint, HeaderLayout) {
  const auto cfg = small_config(Precision::kSingle);
  const std::string bytes = encode_checkpoint(cfg, EncoderParams<float>::init(cfg));
  EXPECT_EQ(bytes.substr(0, 8), "GGSACKPT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), kCheckpointVersion);
  EXPECT_EQ(bytes[9], 0);
  const std::string text = to_text(cfg);
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[12 + i]);
  EXPECT_EQ(len, text.size());
  EXPECT_EQ(bytes.substr(20, text.size()), text);
}

TEST(Checkpoint, CorruptionMapsToDistinctCategories) {
  const auto cfg = small_config(Precision::kSingle);
  const std::string good = encode_checkpoint(cfg, EncoderParams<float>::init(cfg));

  std::string payload = good;
  payload[payload.size() - 40] ^= 0x01;
  expect_load_error<ChecksumError>(payload);

  std::string crc = good;
  crc.back() ^= 0x80;
  expect_load_error<ChecksumError>(crc);

  std::string version = good;
  version[8] = 2;
  expect_load_error<VersionError>(version);

  std::string magic = good;
  magic[0] = 'X';
  expect_load_error<FormatError>(magic);

  expect_load_error<TruncatedError>(good.substr(0, good.size() - 100));
  expect_load_error<TruncatedError>(good.substr(0, 10));
  expect_load_error<TruncatedError>(good.substr(0, 4));

  EXPECT_THROW(load_checkpoint(scratch("does_not_exist.ckpt")), CheckpointError);
}

TEST(Checkpoint, ConflictingConfigIsRejected) {
  const auto cfg = small_config(Precision::kSingle);
  const Checkpoint ck = decode_checkpoint(encode_checkpoint(cfg, EncoderParams<float>::init(cfg)));
  auto wide = cfg;
  wide.embed_dim = 16;
  EXPECT_THROW(checkpoint_params<float>(ck, &wide), ConfigConflictError);
  auto plain = cfg;
  plain.variant = Variant::kGgsa;
  EXPECT_THROW(checkpoint_params<float>(ck, &plain), ConfigConflictError);
  EXPECT_THROW(checkpoint_params<double>(ck), ConfigConflictError);
  auto reseeded = cfg;
  reseeded.seed = 99;
  reseeded.keep_prob = 0.5;
  EXPECT_NO_THROW(checkpoint_params<float>(ck, &reseeded));
}
