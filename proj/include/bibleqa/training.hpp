#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <limits>
#include <map>
#include <vector>

#include "bibleqa/autodiff.hpp"
#include "bibleqa/data_pipeline.hpp"
#include "bibleqa/embeddings.hpp"
#include "bibleqa/evaluation.hpp"
#include "bibleqa/models.hpp"

namespace bqa {

inline constexpr double kProbabilityClamp = 1e-7;
inline constexpr double kAdaGradEpsilon = 1e-8;

// Mean binary cross-entropy of p (any shape, N elements) against labels in {0, 1};
// p is clamped to [1e-7, 1 - 1e-7].
Var bce_loss(Var p, const std::vector<double>& labels);
double bce_value(const std::vector<double>& p, const std::vector<double>& labels);

struct AdaGradState {
  std::map<std::string, Tensor> accumulated;  // sum of squared gradients
  std::uint64_t steps = 0;
};

// G += g^2; theta -= eta * g / (sqrt(G) + 1e-8), per coordinate.
void adagrad_step(ParameterSet& params, const ParameterSet& grads, AdaGradState& state, double eta);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

// Tracks the best validation loss; signals a stop after `patience` epochs
// without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
  // Returns true when `val_loss` is a new best.
  bool update(std::size_t epoch, double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

// A question group with its sequences already embedded.
struct EncodedGroup {
  std::size_t qid = 0;
  std::string translation;
  EmbeddedSequence question;
  std::vector<EmbeddedSequence> candidates;
  std::vector<int> labels;
  std::size_t gold = 0;
};

struct SequenceLimits {
  std::size_t question = 30;
  std::size_t answer = 60;
};

std::vector<EncodedGroup> encode_groups(const std::vector<QuestionGroup>& groups, const EmbeddingMatrix& m,
                                        const SequenceLimits& limits = {});

PredictionSet predict(const PairModel& model, const std::vector<EncodedGroup>& groups);
// Mean BCE over every (question, candidate) pair, inference mode.
double dataset_loss(const PairModel& model, const std::vector<EncodedGroup>& groups);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

// Per-epoch hook; returning a value replaces the measured validation loss.
// Intended for tests of the stopping rule.
using ValLossOverride = std::function<std::optional<double>(std::size_t epoch, double measured)>;

// Seeded-shuffled mini-batches of (question, candidate, label) pairs with
// AdaGrad; early stopping on validation loss. On return the model holds the
// parameters of the best validation epoch.
TrainHistory train(PairModel& model, const std::vector<EncodedGroup>& train_groups,
                   const std::vector<EncodedGroup>& val_groups, const TrainConfig& cfg,
                   const ValLossOverride& override_val = nullptr);

}  // namespace bqa
