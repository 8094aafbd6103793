#include <gtest/gtest.h>

#include <bit>
#include <cstring>

#include "bibleqa/checkpoint.hpp"
#include "support/oracles.hpp"

using namespace bqa;

namespace {

ModelConfig cfg_of(ModelKind kind, std::size_t dim = 4, Precision prec = Precision::F32) {
  ModelConfig c;
  c.kind = kind;
  c.input_dim = dim;
  c.hidden = 3;
  c.filters = 5;
  c.window = 2;
  c.dropout = 0.0;
  c.precision = prec;
  return c;
}

EmbeddedSequence random_seq(Rng& rng, std::size_t len, std::size_t dim) {
  EmbeddedSequence s;
  s.rows = oracle::random_tensor(rng, {len, dim});
  s.length = len;
  return s;
}

// Same tokens with `extra` zero embedding dimensions appended to every row.
EmbeddedSequence widen(const EmbeddedSequence& s, std::size_t extra) {
  const std::size_t n = s.rows.extent(0), d = s.rows.extent(1);
  EmbeddedSequence out;
  out.rows = Tensor(Shape{n, d + extra});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out.rows.at(r, c) = s.rows.at(r, c);
  out.length = s.length;
  return out;
}

std::string frame(const std::string& manifest, std::size_t payload_floats) {
  std::string out = "BQAC";
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  u32(1);
  u32(static_cast<std::uint32_t>(manifest.size()));
  out += manifest;
  for (std::size_t i = 0; i < payload_floats; ++i) u32(std::bit_cast<std::uint32_t>(static_cast<float>(i)));
  return out;
}

CheckpointErrorKind kind_of(const std::string& bytes) {
  try {
    parse_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no CheckpointError";
  return CheckpointErrorKind::BadManifest;
}

}  // namespace

class RoundTrip : public ::testing::TestWithParam<std::tuple<ModelKind, Precision>> {};

TEST_P(RoundTrip, SaveLoadIsBitwise) {
  const auto [kind, prec] = GetParam();
  const PairModel m(cfg_of(kind, 4, prec), 17);
  const std::string bytes = save_checkpoint(m);
  const PairModel back = load_checkpoint(bytes);
  EXPECT_EQ(back.config(), m.config());
  ASSERT_EQ(back.params().names(), m.params().names());
  for (const auto& [name, t] : m.params()) {
    const Tensor& u = back.params().at(name);
    ASSERT_EQ(u.shape(), t.shape());
    EXPECT_EQ(std::memcmp(u.values().data(), t.values().data(), t.numel() * sizeof(double)), 0) << name;
  }
  EXPECT_EQ(save_checkpoint(back), bytes);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, RoundTrip,
                         ::testing::Combine(::testing::Values(ModelKind::Rnn, ModelKind::Cnn, ModelKind::Bidaf),
                                            ::testing::Values(Precision::F32, Precision::F64)));

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = save_checkpoint(PairModel(cfg_of(ModelKind::Cnn), 1));
  EXPECT_EQ(bytes.substr(0, 4), "BQAC");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  const std::size_t len = static_cast<unsigned char>(bytes[8]) | static_cast<unsigned char>(bytes[9]) << 8;
  const std::string manifest = bytes.substr(12, len);
  EXPECT_EQ(manifest.find("{\"model_kind\":\"cnn\""), 0u) << manifest;
  EXPECT_NE(manifest.find("{\"name\":\"conv.W\",\"shape\":[8,5],\"dtype\":\"f32\"}"), std::string::npos);
  // conv.W 8x5 + conv.b 5 + out.W 10 + out.b 1 floats
  EXPECT_EQ(bytes.size(), 12 + len + 4 * (40 + 5 + 10 + 1));
}

TEST(Checkpoint, CorruptMagic) {
  std::string bytes = save_checkpoint(PairModel(cfg_of(ModelKind::Rnn), 1));
  bytes[0] = 'X';
  EXPECT_EQ(kind_of(bytes), CheckpointErrorKind::BadMagic);
}

TEST(Checkpoint, UnknownVersion) {
  std::string bytes = save_checkpoint(PairModel(cfg_of(ModelKind::Rnn), 1));
  bytes[4] = 2;
  EXPECT_EQ(kind_of(bytes), CheckpointErrorKind::UnsupportedVersion);
}

TEST(Checkpoint, TruncatedHeaderAndManifest) {
  const std::string bytes = save_checkpoint(PairModel(cfg_of(ModelKind::Rnn), 1));
  EXPECT_EQ(kind_of(bytes.substr(0, 7)), CheckpointErrorKind::Truncated);
  EXPECT_EQ(kind_of(bytes.substr(0, 40)), CheckpointErrorKind::Truncated);
}

TEST(Checkpoint, ShortPayloadIsLengthError) {
  const std::string manifest =
      R"({"model_kind":"cnn","config":{"input_dim":1,"hidden":1,"filters":3,"window":3,"dropout":0.0,)"
      R"("readout":"final-state","precision":"f32"},"tensors":[{"name":"conv.W","shape":[3,3],"dtype":"f32"}]})";
  EXPECT_EQ(kind_of(frame(manifest, 8)), CheckpointErrorKind::LengthMismatch);
  const std::string bytes = save_checkpoint(PairModel(cfg_of(ModelKind::Rnn), 1));
  EXPECT_EQ(kind_of(bytes.substr(0, bytes.size() - 4)), CheckpointErrorKind::LengthMismatch);
}

TEST(Checkpoint, ManifestShapeDisagreesWithConfig) {
  const std::string manifest =
      R"({"model_kind":"cnn","config":{"input_dim":1,"hidden":1,"filters":3,"window":3,"dropout":0.0,)"
      R"("readout":"final-state","precision":"f32"},"tensors":[)"
      R"({"name":"conv.W","shape":[3,3],"dtype":"f32"},{"name":"conv.b","shape":[1,3],"dtype":"f32"},)"
      R"({"name":"out.W","shape":[5,1],"dtype":"f32"},{"name":"out.b","shape":[1,1],"dtype":"f32"}]})";
  EXPECT_EQ(kind_of(frame(manifest, 9 + 3 + 5 + 1)), CheckpointErrorKind::ShapeMismatch);
}

TEST(Checkpoint, GarbageManifest) {
  EXPECT_EQ(kind_of(frame("{not json", 0)), CheckpointErrorKind::BadManifest);
  EXPECT_EQ(kind_of(frame(R"({"model_kind":"lstm"})", 0)), CheckpointErrorKind::BadManifest);
}

// ---- transfer -------------------------------------------------------------------------

TEST(Transfer, IdenticalShapesCopyEverything) {
  for (ModelKind kind : {ModelKind::Rnn, ModelKind::Cnn, ModelKind::Bidaf}) {
    const PairModel src(cfg_of(kind), 1);
    PairModel dst(cfg_of(kind), 2);
    const auto report = transfer_weights(make_checkpoint(src), dst);
    EXPECT_TRUE(report.all_copied());
    EXPECT_EQ(report.copied.size(), src.params().size());
    EXPECT_EQ(dst.params(), src.params());
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      const auto q = random_seq(rng, 1 + rng.below(5), 4), a = random_seq(rng, 1 + rng.below(5), 4);
      EXPECT_EQ(dst.score(q, a), src.score(q, a));
    }
  }
}

TEST(Transfer, GrownLstmInputKeepsBlocksInPlace) {
  ModelConfig small = cfg_of(ModelKind::Rnn, 100, Precision::F64);
  ModelConfig wide = small;
  wide.input_dim = 300;
  const PairModel src(small, 4);
  PairModel dst(wide, 5);
  const auto report = transfer_weights(make_checkpoint(src), dst);
  EXPECT_FALSE(report.all_copied());
  const std::size_t h = small.hidden;
  for (const std::string prefix : {"q_lstm", "a_lstm"})
    for (char gate : kLstmGates) {
      const std::string name = prefix + ".W_" + gate;
      EXPECT_NE(std::find(report.extended.begin(), report.extended.end(), name), report.extended.end());
      const Tensor& s = src.params().at(name);
      const Tensor& d = dst.params().at(name);
      ASSERT_EQ(d.shape(), (Shape{300 + h, h}));
      for (std::size_t c = 0; c < h; ++c) {
        for (std::size_t r = 0; r < 100; ++r) EXPECT_EQ(d.at(r, c), s.at(r, c));
        for (std::size_t r = 100; r < 300; ++r) EXPECT_EQ(d.at(r, c), 0.0);
        for (std::size_t r = 0; r < h; ++r) EXPECT_EQ(d.at(300 + r, c), s.at(100 + r, c));
      }
    }
  EXPECT_EQ(dst.params().at("out.W"), src.params().at("out.W"));
}

TEST(Transfer, GrownInputPreservesOutputsOnZeroExtension) {
  for (ModelKind kind : {ModelKind::Rnn, ModelKind::Cnn, ModelKind::Bidaf}) {
    ModelConfig small = cfg_of(kind, 5, Precision::F64), wide = small;
    wide.input_dim = 15;
    const PairModel src(small, 6);
    PairModel dst(wide, 7);
    transfer_weights(make_checkpoint(src), dst);
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
      const auto q = random_seq(rng, 1 + rng.below(5), 5), a = random_seq(rng, 1 + rng.below(5), 5);
      EXPECT_EQ(dst.score(widen(q, 10), widen(a, 10)), src.score(q, a)) << to_string(kind);
    }
  }
}

TEST(Transfer, OutputLayerMismatchIsAnError) {
  ModelConfig a = cfg_of(ModelKind::Rnn), b = a;
  b.hidden = 5;
  PairModel dst(b, 1);
  EXPECT_THROW(transfer_weights(make_checkpoint(PairModel(a, 2)), dst), ShapeError);
}

TEST(Transfer, ShrinkingInputIsAnError) {
  ModelConfig a = cfg_of(ModelKind::Cnn, 6), b = cfg_of(ModelKind::Cnn, 4);
  PairModel dst(b, 1);
  EXPECT_THROW(transfer_weights(make_checkpoint(PairModel(a, 2)), dst), ShapeError);
}

TEST(Transfer, KindMismatchIsAnError) {
  PairModel dst(cfg_of(ModelKind::Cnn), 1);
  EXPECT_THROW(transfer_weights(make_checkpoint(PairModel(cfg_of(ModelKind::Rnn), 2)), dst), ValidationError);
}

TEST(Transfer, CopiedValuesAreExact) {
  ModelConfig c = cfg_of(ModelKind::Bidaf, 4, Precision::F64);
  Checkpoint src = make_checkpoint(PairModel(c, 3));
  for (auto& [n, t] : src.params)
    for (auto& v : t.values()) v = v * 1e-300 + 1e-310;  // subnormal-range values survive untouched
  PairModel dst(c, 4);
  transfer_weights(src, dst);
  EXPECT_EQ(dst.params(), src.params);
}
