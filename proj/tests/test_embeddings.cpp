#include <gtest/gtest.h>

#include <sstream>

#include "bibleqa/embeddings.hpp"
#include "bibleqa/errors.hpp"
#include "support/corpora.hpp"

using namespace bqa;

namespace {

EmbeddingMatrix parse(const std::string& text, std::size_t dim) {
  std::istringstream in(text);
  return load_pretrained(in, dim);
}

std::vector<double> row_of(const EmbeddingMatrix& m, const std::string& tok) {
  auto r = m.row(m.vocab.find(tok));
  return {r.begin(), r.end()};
}

bool all_zero(std::span<const double> r) {
  for (double v : r)
    if (v != 0.0) return false;
  return true;
}

double mean_cosine(const EmbeddingMatrix& m, char pa, char pb, std::size_t n) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (pa == pb && i == j) continue;
      const std::string x = pa + std::to_string(i), y = pb + std::to_string(j);
      if (!m.vocab.contains(x) || !m.vocab.contains(y)) continue;
      total += cosine(m.row(m.vocab.find(x)), m.row(m.vocab.find(y)));
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace

TEST(Vocabulary, ReservedIndices) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.add("lamb"), 2u);
  EXPECT_EQ(v.add("lamb"), 2u);
  EXPECT_EQ(v.index_of("goat"), Vocabulary::kUnk);
  EXPECT_THROW(v.find("goat"), NotFoundError);
}

// ---- loading --------------------------------------------------------------------

TEST(LoadPretrained, SingleLine) {
  const auto m = parse("cat 0.1 0.2\n", 2);
  EXPECT_EQ(m.vocab.size(), 3u);
  EXPECT_EQ(row_of(m, "cat"), (std::vector<double>{0.1, 0.2}));
  EXPECT_TRUE(all_zero(m.row(Vocabulary::kPad)));
}

TEST(LoadPretrained, EmptyStreamHasOnlyReservedRows) {
  const auto m = parse("", 4);
  EXPECT_EQ(m.vocab.size(), 2u);
  EXPECT_EQ(m.table.shape(), (Shape{2, 4}));
}

TEST(LoadPretrained, WrongComponentCountReportsLine) {
  try {
    parse("a 1 2\nb 1 2 3\n", 2);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("a 1\n", 2), ParseError);
  EXPECT_THROW(parse("a 1 x\n", 2), ParseError);
}

TEST(LoadPretrained, DuplicateKeepsFirst) {
  const auto m = parse("a 1 2\na 3 4\n", 2);
  EXPECT_EQ(m.vocab.size(), 3u);
  EXPECT_EQ(row_of(m, "a"), (std::vector<double>{1, 2}));
}

TEST(LoadPretrained, UnkIsMeanOfLoadedVectors) {
  const auto m = parse("a 1 2\nb 3 -4\n", 2);
  const auto unk = m.row(Vocabulary::kUnk);
  EXPECT_DOUBLE_EQ(unk[0], 2.0);
  EXPECT_DOUBLE_EQ(unk[1], -1.0);
}

TEST(LoadPretrained, WriteThenReadRoundTrips) {
  const auto m = parse("a 0.1 -2.5e-3\nb 3 4\n", 2);
  std::ostringstream os;
  write_embeddings(os, m);
  EXPECT_EQ(parse(os.str(), 2).table, m.table);
}

// ---- CBOW -----------------------------------------------------------------------

TEST(Cbow, LossDecreasesOnSmallCorpus) {
  const auto corpus = corpora::small_text(1000, 2);
  CbowConfig cfg;
  cfg.dim = 20;
  cfg.epochs = 5;
  const auto r = train_cbow(corpus, cfg);
  ASSERT_EQ(r.epoch_losses.size(), 6u);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(Cbow, FullSoftmaxLossDecreases) {
  CbowConfig cfg;
  cfg.dim = 10;
  cfg.epochs = 3;
  cfg.full_softmax = true;
  const auto r = train_cbow(corpora::small_text(600, 4), cfg);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(Cbow, TwoClustersSeparate) {
  const auto corpus = corpora::two_clusters(200, 10, 8, 3);
  CbowConfig cfg;
  cfg.dim = 20;
  cfg.epochs = 10;
  const auto m = train_cbow(corpus, cfg).embeddings;
  const double within = (mean_cosine(m, 'a', 'a', 8) + mean_cosine(m, 'b', 'b', 8)) / 2;
  const double across = mean_cosine(m, 'a', 'b', 8);
  EXPECT_GE(within - across, 0.2) << "within " << within << " across " << across;
}

TEST(Cbow, SameSeedIsBitwiseIdentical) {
  const auto corpus = corpora::small_text(500, 5);
  CbowConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 2;
  const auto a = train_cbow(corpus, cfg), b = train_cbow(corpus, cfg);
  EXPECT_EQ(a.embeddings.table, b.embeddings.table);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  cfg.seed = 2;
  EXPECT_NE(train_cbow(corpus, cfg).embeddings.table, a.embeddings.table);
}

TEST(Cbow, PadRowNeverMoves) {
  auto corpus = corpora::small_text(300, 6);
  corpus[0].push_back("<pad>");
  CbowConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 2;
  EXPECT_TRUE(all_zero(train_cbow(corpus, cfg).embeddings.row(Vocabulary::kPad)));
}

TEST(Cbow, CorpusShorterThanWindowRejected) {
  CbowConfig cfg;
  cfg.window = 5;
  EXPECT_THROW(train_cbow({{"a", "b", "c"}, {"d", "e"}}, cfg), InsufficientDataError);
  EXPECT_NO_THROW(train_cbow({{"a", "b", "c"}, {"d", "e", "f"}}, CbowConfig{5, 4, 5, 1, 0.05, 1, false}));
}

// ---- concat / sequences / neighbours ----------------------------------------------

TEST(Concat, SharedTokenJoinsRows) {
  Rng rng(1);
  std::ostringstream a, b;
  a << "lord";
  for (int i = 0; i < 100; ++i) a << ' ' << rng.uniform();
  b << "lord";
  for (int i = 0; i < 200; ++i) b << ' ' << rng.uniform();
  const auto ma = parse(a.str(), 100), mb = parse(b.str(), 200);
  const auto m = concat_embeddings(ma, mb);
  EXPECT_EQ(m.dim, 300u);
  auto joined = row_of(m, "lord");
  auto ra = row_of(ma, "lord"), rb = row_of(mb, "lord");
  ra.insert(ra.end(), rb.begin(), rb.end());
  EXPECT_EQ(joined, ra);
}

TEST(Concat, MissingSideIsZeroFilled) {
  const auto m = concat_embeddings(parse("x 1 2\n", 2), parse("y 3 4 5\n", 3));
  EXPECT_EQ(row_of(m, "x"), (std::vector<double>{1, 2, 0, 0, 0}));
  EXPECT_EQ(row_of(m, "y"), (std::vector<double>{0, 0, 3, 4, 5}));
  EXPECT_EQ(m.vocab.size(), 2u + 2u);
  EXPECT_TRUE(all_zero(m.row(Vocabulary::kPad)));
}

TEST(Concat, DimIsAlwaysSum) {
  for (std::size_t da = 1; da < 5; ++da)
    for (std::size_t db = 1; db < 5; ++db) {
      EXPECT_EQ(concat_embeddings(parse("", da), parse("", db)).dim, da + db);
    }
}

TEST(EmbedSequence, PadsShortInput) {
  const auto m = parse("a 1 1\nb 2 2\n", 2);
  const auto s = embed_sequence({"a", "b"}, m, 4);
  EXPECT_EQ(s.length, 2u);
  EXPECT_EQ(s.rows, Tensor::matrix({{1, 1}, {2, 2}, {0, 0}, {0, 0}}));
}

TEST(EmbedSequence, UnknownTokenUsesUnk) {
  const auto m = parse("a 1 1\nb 3 5\n", 2);
  const auto s = embed_sequence({"zzz"}, m, 1);
  EXPECT_EQ(s.rows, Tensor::matrix({{2, 3}}));
}

TEST(EmbedSequence, TruncatesTail) {
  const auto m = parse("a 1 0\nb 0 1\n", 2);
  std::vector<std::string> toks = {"a", "b", "a", "b", "b", "b", "b", "b", "b", "b"};
  const auto s = embed_sequence(toks, m, 4);
  EXPECT_EQ(s.length, 4u);
  EXPECT_EQ(s.rows, Tensor::matrix({{1, 0}, {0, 1}, {1, 0}, {0, 1}}));
}

TEST(EmbedSequence, ShapeIndependentOfLength) {
  const auto m = parse("a 1 0 2\n", 3);
  for (std::size_t n = 0; n < 12; ++n) {
    const auto s = embed_sequence(std::vector<std::string>(n, "a"), m, 5);
    EXPECT_EQ(s.rows.shape(), (Shape{5, 3}));
    EXPECT_EQ(s.length, std::min<std::size_t>(n, 5));
  }
}

TEST(Neighbors, ScaledCopyRanksFirst) {
  const auto m = parse("v 1 2\nw 2 4\nu -1 3\n", 2);
  const auto nn = nearest_neighbors("v", m, 2);
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0].first, "w");
  EXPECT_NEAR(nn[0].second, 1.0, 1e-12);
}

TEST(Neighbors, OrthogonalIsZeroAndTiesByIndex) {
  const auto m = parse("q 1 0\nx 0 1\ny 0 2\n", 2);
  const auto nn = nearest_neighbors("q", m, 5);
  ASSERT_EQ(nn.size(), 2u);  // PAD, UNK and the query are excluded
  EXPECT_EQ(nn[0].first, "x");
  EXPECT_EQ(nn[1].first, "y");
  EXPECT_EQ(nn[0].second, 0.0);
}

TEST(Neighbors, UnknownQueryNotFound) { EXPECT_THROW(nearest_neighbors("nope", parse("a 1\n", 1), 1), NotFoundError); }

TEST(Neighbors, InvariantUnderUniformScaling) {
  Rng rng(4);
  std::ostringstream text;
  for (int i = 0; i < 30; ++i) text << 't' << i << ' ' << rng.normal() << ' ' << rng.normal() << ' ' << rng.normal() << '\n';
  auto m = parse(text.str(), 3);
  const auto before = nearest_neighbors("t0", m, 10);
  for (auto& v : m.table.values()) v *= 3.5;
  const auto after = nearest_neighbors("t0", m, 10);
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].first, after[i].first);
}

TEST(Cosine, ScaleInvariantAndSymmetric) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(5), b(5), sa(5);
    for (int i = 0; i < 5; ++i) a[i] = rng.normal(), b[i] = rng.normal();
    const double alpha = rng.uniform(0.1, 10);
    for (int i = 0; i < 5; ++i) sa[i] = alpha * a[i];
    EXPECT_NEAR(cosine(a, sa), 1.0, 1e-12);
    EXPECT_EQ(cosine(a, b), cosine(b, a));
  }
}
