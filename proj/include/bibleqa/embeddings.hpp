#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bibleqa/tensor.hpp"

namespace bqa {

// Token <-> index map. Index 0 is PAD and index 1 is UNK.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();

  // Returns the index of the token, inserting it when new.
  std::size_t add(const std::string& token);
  bool contains(const std::string& token) const { return index_.contains(token); }
  // UNK for unknown tokens.
  std::size_t index_of(const std::string& token) const;
  std::size_t find(const std::string& token) const;  // throws NotFoundError
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
};

struct EmbeddingMatrix {
  Vocabulary vocab;
  std::size_t dim = 0;
  Tensor table;  // [|V| x dim]
  bool trainable = false;

  std::span<const double> row(std::size_t index) const {
    return table.values().subspan(index * dim, dim);
  }
};

// Pretrained text format: `token SP real{dim}` per line. UNK becomes the mean
// of all loaded vectors; duplicate tokens keep the first occurrence.
EmbeddingMatrix load_pretrained(std::istream& in, std::size_t expected_dim);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& m);

struct CbowConfig {
  std::size_t window = 5;
  std::size_t dim = 200;
  std::size_t negative_samples = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
  // Exact softmax over the whole vocabulary instead of negative sampling.
  // Only sensible for tiny vocabularies.
  bool full_softmax = false;
};

struct CbowResult {
  EmbeddingMatrix embeddings;
  // losses[0] is measured before any update, losses[e] after epoch e.
  std::vector<double> epoch_losses;
};

CbowResult train_cbow(const std::vector<std::vector<std::string>>& corpus, const CbowConfig& cfg);

// Union vocabulary; rows are [a-row | b-row] with zeros for a missing side.
EmbeddingMatrix concat_embeddings(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

// A fixed-length [max_len x dim] embedding plus the number of real tokens.
struct EmbeddedSequence {
  Tensor rows;
  std::size_t length = 0;
};

EmbeddedSequence embed_sequence(const std::vector<std::string>& tokens, const EmbeddingMatrix& m,
                                std::size_t max_len);

double cosine(std::span<const double> a, std::span<const double> b);

std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word,
                                                              const EmbeddingMatrix& m,
                                                              std::size_t k);

}  // namespace bqa
