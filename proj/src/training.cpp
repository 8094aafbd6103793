#include "bibleqa/training.hpp"

#include <cmath>

#include "bibleqa/errors.hpp"
#include "bibleqa/log.hpp"
#include "bibleqa/rng.hpp"

namespace bqa {

// ---- loss -----------------------------------------------------------------------

namespace {

void check_labels(std::size_t n, const std::vector<double>& labels) {
  if (n == 0 || labels.empty()) throw ValidationError("bce_loss: empty batch");
  if (labels.size() != n) {
    throw ShapeError("bce_loss: " + std::to_string(n) + " probabilities vs " + std::to_string(labels.size()) +
                     " labels");
  }
  for (double y : labels)
    if (y != 0.0 && y != 1.0) throw ValidationError("bce_loss: label " + std::to_string(y) + " not in {0,1}");
}

}  // namespace

Var bce_loss(Var p, const std::vector<double>& labels) {
  const Tensor& pv = p.value();
  check_labels(pv.numel(), labels);
  Graph& g = *p.graph();
  Tensor y(pv.shape(), labels);
  Tensor not_y(pv.shape());
  for (std::size_t i = 0; i < labels.size(); ++i) not_y[i] = 1.0 - labels[i];

  Var pc = clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  Var pos = mul(g.constant(std::move(y)), log(pc));
  Var neg = mul(g.constant(std::move(not_y)), log(affine(pc, -1.0, 1.0)));
  return affine(mean_all(add(pos, neg)), -1.0);
}

double bce_value(const std::vector<double>& p, const std::vector<double>& labels) {
  check_labels(p.size(), labels);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += labels[i] * std::log(pc) + (1.0 - labels[i]) * std::log(1.0 - pc);
  }
  return -total / static_cast<double>(p.size());
}

// ---- AdaGrad ----------------------------------------------------------------------

void adagrad_step(ParameterSet& params, const ParameterSet& grads, AdaGradState& state, double eta) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw ShapeError("adagrad: gradient for unknown parameter " + name);
    if (params.at(name).shape() != g.shape()) {
      throw ShapeError("adagrad: " + name + " has shape " + shape_str(params.at(name).shape()) + " but gradient " +
                       shape_str(g.shape()));
    }
  }
  for (const auto& [name, g] : grads) {
    Tensor& theta = params.at(name);
    auto [it, _] = state.accumulated.try_emplace(name, Tensor::zeros(theta.shape()));
    Tensor& acc = it->second;
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      acc[i] += g[i] * g[i];
      if (g[i] != 0.0) theta[i] -= eta * g[i] / (std::sqrt(acc[i]) + kAdaGradEpsilon);
    }
  }
  ++state.steps;
}

// ---- training loop ------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (max_epochs < 1) throw ValidationError("max epochs must be >= 1");
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::vector<EncodedGroup> encode_groups(const std::vector<QuestionGroup>& groups, const EmbeddingMatrix& m,
                                        const SequenceLimits& limits) {
  std::vector<EncodedGroup> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    EncodedGroup e;
    e.qid = g.qid;
    e.translation = g.translation;
    e.gold = g.gold_index();
    e.question = embed_sequence(g.question_tokens, m, limits.question);
    for (const auto& c : g.candidates) {
      e.candidates.push_back(embed_sequence(c.tokens, m, limits.answer));
      e.labels.push_back(c.label);
    }
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::vector<std::vector<double>> score_all(const PairModel& model, const std::vector<EncodedGroup>& groups) {
  std::vector<std::vector<double>> out;
  out.reserve(groups.size());
  for (const auto& grp : groups) {
    Graph g;
    const BoundParams bound = bind_constants(g, model.params());
    std::vector<double> scores;
    scores.reserve(grp.candidates.size());
    for (const auto& c : grp.candidates) scores.push_back(model.forward(g, bound, grp.question, c).value().item());
    out.push_back(std::move(scores));
  }
  return out;
}

PredictionSet to_predictions(const std::vector<EncodedGroup>& groups, std::vector<std::vector<double>> scores) {
  PredictionSet out;
  out.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out.push_back(QuestionPrediction{groups[i].qid, groups[i].translation, std::move(scores[i]), groups[i].gold});
  }
  return out;
}

double mean_loss(const std::vector<EncodedGroup>& groups, const std::vector<std::vector<double>>& scores) {
  std::vector<double> p, y;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = 0; j < scores[i].size(); ++j) {
      p.push_back(scores[i][j]);
      y.push_back(groups[i].labels[j]);
    }
  return bce_value(p, y);
}

}  // namespace

PredictionSet predict(const PairModel& model, const std::vector<EncodedGroup>& groups) {
  return to_predictions(groups, score_all(model, groups));
}

double dataset_loss(const PairModel& model, const std::vector<EncodedGroup>& groups) {
  return mean_loss(groups, score_all(model, groups));
}

TrainHistory train(PairModel& model, const std::vector<EncodedGroup>& train_groups,
                   const std::vector<EncodedGroup>& val_groups, const TrainConfig& cfg,
                   const ValLossOverride& override_val) {
  cfg.validate();
  if (train_groups.empty()) throw InsufficientDataError("training set is empty");
  const auto& monitor = val_groups.empty() ? train_groups : val_groups;

  struct Pair {
    std::size_t group, candidate;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < train_groups.size(); ++i)
    for (std::size_t j = 0; j < train_groups[i].candidates.size(); ++j) pairs.push_back({i, j});

  Rng order_rng(cfg.seed);
  Rng dropout_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  AdaGradState opt;
  EarlyStopping stopper(cfg.patience);
  ParameterSet best = model.params();
  TrainHistory history;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order_rng.shuffle(pairs);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(pairs.size(), start + cfg.batch_size);
      Graph g;
      const BoundParams bound = bind_variables(g, model.params());
      std::vector<Var> probs;
      std::vector<double> labels;
      for (std::size_t k = start; k < end; ++k) {
        const EncodedGroup& grp = train_groups[pairs[k].group];
        probs.push_back(model.forward(g, bound, grp.question, grp.candidates[pairs[k].candidate],
                                      ForwardOptions{true, &dropout_rng}));
        labels.push_back(grp.labels[pairs[k].candidate]);
      }
      Var loss = bce_loss(concat(probs, 0), labels);
      g.backward(loss);
      adagrad_step(model.params(), collect_grads(g, bound), opt, cfg.learning_rate);
      model.normalize_precision();
      loss_sum += loss.value().item() * static_cast<double>(end - start);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(pairs.size());
    auto scores = score_all(model, monitor);
    rec.val_loss = mean_loss(monitor, scores);
    rec.val_f1 = f1_top1(to_predictions(monitor, std::move(scores))).f1;
    if (override_val) {
      if (auto v = override_val(epoch, rec.val_loss)) rec.val_loss = *v;
    }
    history.epochs.push_back(rec);
    logging::write(logging::Level::Debug, "epoch " + std::to_string(epoch) + " train " + std::to_string(rec.train_loss) +
                                      " val " + std::to_string(rec.val_loss) + " f1 " + std::to_string(rec.val_f1));

    if (stopper.update(epoch, rec.val_loss)) best = model.params();
    if (stopper.should_stop()) {
      history.stopped_early = true;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  model.params() = std::move(best);
  return history;
}

}  // namespace bqa
