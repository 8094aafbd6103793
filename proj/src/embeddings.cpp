#include "bibleqa/embeddings.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "bibleqa/errors.hpp"
#include "bibleqa/log.hpp"
#include "bibleqa/rng.hpp"

namespace bqa {

// ---- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw NotFoundError("token not in vocabulary: " + token);
  return it->second;
}

// ---- text format ------------------------------------------------------------

namespace {

void set_unk_to_mean(EmbeddingMatrix& m) {
  const std::size_t n = m.vocab.size();
  std::vector<double> mean(m.dim, 0.0);
  if (n > 2) {
    for (std::size_t r = 2; r < n; ++r)
      for (std::size_t c = 0; c < m.dim; ++c) mean[c] += m.table[r * m.dim + c];
    for (auto& v : mean) v /= static_cast<double>(n - 2);
  }
  for (std::size_t c = 0; c < m.dim; ++c) m.table[Vocabulary::kUnk * m.dim + c] = mean[c];
}

}  // namespace

EmbeddingMatrix load_pretrained(std::istream& in, std::size_t expected_dim) {
  if (expected_dim == 0) throw ValidationError("embedding dimension must be positive");
  EmbeddingMatrix m;
  m.dim = expected_dim;
  std::vector<double> values(2 * expected_dim, 0.0);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> row;
    row.reserve(expected_dim);
    std::string num;
    while (fields >> num) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(num.c_str(), &end);
      if (end != num.c_str() + num.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ParseError(line_no, "bad real '" + num + "'");
      }
      row.push_back(v);
    }
    if (row.size() != expected_dim) {
      throw ParseError(line_no, "expected " + std::to_string(expected_dim) + " components, got " +
                                    std::to_string(row.size()));
    }
    if (m.vocab.contains(token)) {
      logging::warn("embeddings line " + std::to_string(line_no) + ": duplicate token '" + token +
                "', keeping first");
      continue;
    }
    m.vocab.add(token);
    values.insert(values.end(), row.begin(), row.end());
  }
  m.table = Tensor(Shape{m.vocab.size(), expected_dim}, std::move(values));
  set_unk_to_mean(m);
  return m;
}

void write_embeddings(std::ostream& out, const EmbeddingMatrix& m) {
  out.precision(17);
  for (std::size_t r = 2; r < m.vocab.size(); ++r) {
    out << m.vocab.token(r);
    for (double v : m.row(r)) out << ' ' << v;
    out << '\n';
  }
}

// ---- CBOW -------------------------------------------------------------------

namespace {

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

class CbowTrainer {
 public:
  CbowTrainer(const std::vector<std::vector<std::string>>& corpus, const CbowConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed) {
    for (const auto& sentence : corpus) {
      std::vector<std::size_t> ids;
      ids.reserve(sentence.size());
      for (const auto& tok : sentence) {
        // Reserved names never enter training, so PAD stays zero.
        if (tok == Vocabulary::kPadToken || tok == Vocabulary::kUnkToken) continue;
        const std::size_t id = vocab_.add(tok);
        if (id >= counts_.size()) counts_.resize(id + 1, 0);
        ++counts_[id];
        ids.push_back(id);
      }
      sentences_.push_back(std::move(ids));
    }
    counts_.resize(vocab_.size(), 0);
    const std::size_t v = vocab_.size();
    input_.assign(v * cfg.dim, 0.0);
    output_.assign(v * cfg.dim, 0.0);
    for (std::size_t r = 2; r < v; ++r)
      for (std::size_t c = 0; c < cfg.dim; ++c)
        input_[r * cfg.dim + c] = (rng_.uniform() - 0.5) / static_cast<double>(cfg.dim);

    double total = 0.0;
    noise_cdf_.assign(v, 0.0);
    for (std::size_t r = 0; r < v; ++r) {
      total += counts_[r] ? std::pow(static_cast<double>(counts_[r]), 0.75) : 0.0;
      noise_cdf_[r] = total;
    }
    for (auto& x : noise_cdf_) x /= total;
  }

  // One pass over the corpus; updates parameters only when `learn`.
  double pass(bool learn) {
    const std::size_t d = cfg_.dim;
    std::vector<double> hidden(d), hidden_grad(d);
    std::vector<std::size_t> context;
    double loss_sum = 0.0;
    std::size_t examples = 0;
    for (const auto& sent : sentences_) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos) {
        context.clear();
        const std::size_t lo = pos >= cfg_.window ? pos - cfg_.window : 0;
        const std::size_t hi = std::min(sent.size(), pos + cfg_.window + 1);
        for (std::size_t j = lo; j < hi; ++j)
          if (j != pos) context.push_back(sent[j]);
        if (context.empty()) continue;

        std::fill(hidden.begin(), hidden.end(), 0.0);
        for (auto c : context)
          for (std::size_t k = 0; k < d; ++k) hidden[k] += input_[c * d + k];
        for (auto& h : hidden) h /= static_cast<double>(context.size());
        std::fill(hidden_grad.begin(), hidden_grad.end(), 0.0);

        const std::size_t target = sent[pos];
        loss_sum += cfg_.full_softmax ? softmax_step(target, hidden, hidden_grad, learn)
                                      : negative_step(target, hidden, hidden_grad, learn);
        ++examples;
        if (learn) {
          for (auto c : context)
            for (std::size_t k = 0; k < d; ++k) input_[c * d + k] += hidden_grad[k];
        }
      }
    }
    return examples ? loss_sum / static_cast<double>(examples) : 0.0;
  }

  EmbeddingMatrix finish() const {
    EmbeddingMatrix m;
    m.vocab = vocab_;
    m.dim = cfg_.dim;
    m.table = Tensor(Shape{vocab_.size(), cfg_.dim}, input_);
    m.trainable = true;
    set_unk_to_mean(m);
    return m;
  }

 private:
  double dot_out(std::size_t w, const std::vector<double>& h) const {
    double s = 0.0;
    for (std::size_t k = 0; k < cfg_.dim; ++k) s += output_[w * cfg_.dim + k] * h[k];
    return s;
  }

  std::size_t sample_noise() {
    const double u = rng_.uniform();
    auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
    if (it == noise_cdf_.end()) --it;
    return static_cast<std::size_t>(it - noise_cdf_.begin());
  }

  void update_output(std::size_t w, double g, const std::vector<double>& h, std::vector<double>& hg) {
    const std::size_t d = cfg_.dim;
    for (std::size_t k = 0; k < d; ++k) {
      hg[k] += g * output_[w * d + k];
      output_[w * d + k] += g * h[k];
    }
  }

  double negative_step(std::size_t target, const std::vector<double>& h, std::vector<double>& hg,
                       bool learn) {
    double loss = 0.0;
    for (std::size_t s = 0; s <= cfg_.negative_samples; ++s) {
      std::size_t w = target;
      double label = 1.0;
      if (s > 0) {
        w = sample_noise();
        if (w == target) continue;
        label = 0.0;
      }
      const double z = dot_out(w, h);
      loss -= label > 0 ? log_sigmoid(z) : log_sigmoid(-z);
      if (learn) update_output(w, (label - sigmoid(z)) * cfg_.learning_rate, h, hg);
    }
    return loss;
  }

  double softmax_step(std::size_t target, const std::vector<double>& h, std::vector<double>& hg,
                      bool learn) {
    const std::size_t v = vocab_.size();
    std::vector<double> z(v, 0.0);
    double mx = -INFINITY;
    for (std::size_t w = 2; w < v; ++w) {
      z[w] = dot_out(w, h);
      mx = std::max(mx, z[w]);
    }
    double total = 0.0;
    for (std::size_t w = 2; w < v; ++w) total += std::exp(z[w] - mx);
    const double log_norm = mx + std::log(total);
    if (learn) {
      for (std::size_t w = 2; w < v; ++w) {
        const double p = std::exp(z[w] - log_norm);
        update_output(w, ((w == target ? 1.0 : 0.0) - p) * cfg_.learning_rate, h, hg);
      }
    }
    return log_norm - z[target];
  }

  CbowConfig cfg_;
  Rng rng_;
  Vocabulary vocab_;
  std::vector<std::size_t> counts_;
  std::vector<std::vector<std::size_t>> sentences_;
  std::vector<double> input_, output_, noise_cdf_;
};

}  // namespace

CbowResult train_cbow(const std::vector<std::vector<std::string>>& corpus, const CbowConfig& cfg) {
  if (cfg.window < 1 || cfg.dim < 1) throw ValidationError("CBOW window and dim must be >= 1");
  std::size_t tokens = 0;
  for (const auto& s : corpus) tokens += s.size();
  if (tokens < cfg.window + 1) {
    throw InsufficientDataError("CBOW needs at least " + std::to_string(cfg.window + 1) +
                                " tokens, corpus has " + std::to_string(tokens));
  }
  CbowTrainer trainer(corpus, cfg);
  CbowResult result;
  result.epoch_losses.push_back(trainer.pass(false));
  for (std::size_t e = 0; e < cfg.epochs; ++e) result.epoch_losses.push_back(trainer.pass(true));
  result.embeddings = trainer.finish();
  return result;
}

// ---- composition --------------------------------------------------------------

EmbeddingMatrix concat_embeddings(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  EmbeddingMatrix out;
  out.dim = a.dim + b.dim;
  for (std::size_t r = 2; r < a.vocab.size(); ++r) out.vocab.add(a.vocab.token(r));
  for (std::size_t r = 2; r < b.vocab.size(); ++r) out.vocab.add(b.vocab.token(r));
  out.table = Tensor(Shape{out.vocab.size(), out.dim});
  out.trainable = a.trainable || b.trainable;

  // UNK concatenates both UNK rows; PAD stays zero.
  for (std::size_t r = 1; r < out.vocab.size(); ++r) {
    const std::string& tok = out.vocab.token(r);
    double* dst = out.table.values().data() + r * out.dim;
    const std::size_t ia = r == 1 ? 1 : (a.vocab.contains(tok) ? a.vocab.find(tok) : 0);
    const std::size_t ib = r == 1 ? 1 : (b.vocab.contains(tok) ? b.vocab.find(tok) : 0);
    if (ia) std::copy_n(a.row(ia).data(), a.dim, dst);
    if (ib) std::copy_n(b.row(ib).data(), b.dim, dst + a.dim);
  }
  return out;
}

EmbeddedSequence embed_sequence(const std::vector<std::string>& tokens, const EmbeddingMatrix& m,
                                std::size_t max_len) {
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  EmbeddedSequence out;
  out.rows = Tensor(Shape{max_len, m.dim});
  out.length = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < out.length; ++i) {
    const auto row = m.row(m.vocab.index_of(tokens[i]));
    std::copy(row.begin(), row.end(), out.rows.values().begin() + static_cast<std::ptrdiff_t>(i * m.dim));
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word,
                                                              const EmbeddingMatrix& m,
                                                              std::size_t k) {
  const std::size_t q = m.vocab.find(word);
  std::vector<std::pair<std::size_t, double>> scored;
  for (std::size_t r = 2; r < m.vocab.size(); ++r) {
    if (r == q) continue;
    scored.emplace_back(r, cosine(m.row(q), m.row(r)));
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  if (scored.size() > k) scored.resize(k);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(scored.size());
  for (const auto& [idx, sim] : scored) out.emplace_back(m.vocab.token(idx), sim);
  return out;
}

}  // namespace bqa
