#include "bibleqa/evaluation.hpp"

#include <map>

#include <json.hpp>

#include "bibleqa/errors.hpp"
#include "bibleqa/rng.hpp"

namespace bqa {

std::size_t rank_candidates(const std::vector<double>& scores, std::size_t gold) {
  // Candidates ahead of gold: strictly higher score, or equal score earlier in order.
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == gold) continue;
    if (scores[i] > scores[gold] || (scores[i] == scores[gold] && i < gold)) ++rank;
  }
  return rank;
}

std::size_t select_answer(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

namespace {

void require_nonempty(const PredictionSet& preds, const char* what) {
  if (preds.empty()) throw ValidationError(std::string(what) + ": empty prediction set");
  for (const auto& p : preds) {
    if (p.scores.empty() || p.gold >= p.scores.size()) {
      throw ValidationError(std::string(what) + ": question " + std::to_string(p.qid) + " has no valid gold");
    }
  }
}

F1Result from_counts(double tp, double predicted, double golds) {
  F1Result r;
  r.precision = predicted > 0 ? tp / predicted : 0.0;
  r.recall = golds > 0 ? tp / golds : 0.0;
  const double s = r.precision + r.recall;
  r.f1 = s > 0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

}  // namespace

F1Result f1_top1(const PredictionSet& preds) {
  require_nonempty(preds, "f1_top1");
  std::size_t tp = 0;
  for (const auto& p : preds)
    if (select_answer(p.scores) == p.gold) ++tp;
  const auto n = static_cast<double>(preds.size());
  return from_counts(static_cast<double>(tp), n, n);
}

double mrr(const PredictionSet& preds) {
  require_nonempty(preds, "mrr");
  double total = 0.0;
  for (const auto& p : preds) total += 1.0 / static_cast<double>(rank_candidates(p.scores, p.gold));
  return total / static_cast<double>(preds.size());
}

F1Result threshold_f1(const PredictionSet& preds, double threshold) {
  require_nonempty(preds, "threshold_f1");
  std::size_t tp = 0, predicted = 0;
  for (const auto& p : preds)
    for (std::size_t i = 0; i < p.scores.size(); ++i) {
      if (p.scores[i] >= threshold) {
        ++predicted;
        if (i == p.gold) ++tp;
      }
    }
  return from_counts(static_cast<double>(tp), static_cast<double>(predicted), static_cast<double>(preds.size()));
}

PredictionSet random_baseline(const std::vector<QuestionGroup>& groups, std::uint64_t seed) {
  Rng rng(seed);
  PredictionSet out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    QuestionPrediction p;
    p.qid = g.qid;
    p.translation = g.translation;
    p.gold = g.gold_index();
    p.scores.reserve(g.candidates.size());
    for (std::size_t i = 0; i < g.candidates.size(); ++i) p.scores.push_back(rng.uniform());
    out.push_back(std::move(p));
  }
  return out;
}

EvalReport evaluate(const PredictionSet& preds) {
  EvalReport r;
  const F1Result f = f1_top1(preds);
  r.n = preds.size();
  r.f1 = f.f1;
  r.precision = f.precision;
  r.recall = f.recall;
  r.mrr = mrr(preds);
  r.threshold_f1 = threshold_f1(preds).f1;
  r.ranks.reserve(preds.size());
  for (const auto& p : preds) r.ranks.push_back(rank_candidates(p.scores, p.gold));
  return r;
}

std::string report_json(const EvalReport& report, const ReportContext& ctx) {
  std::map<std::size_t, std::size_t> histogram;
  for (auto r : report.ranks) ++histogram[r];
  nlohmann::ordered_json j;
  j["model"] = ctx.model;
  j["dataset"] = ctx.dataset;
  j["translation"] = ctx.translation;
  j["n"] = report.n;
  j["f1"] = report.f1;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["mrr"] = report.mrr;
  j["seed"] = ctx.seed;
  auto& h = j["ranks_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [rank, count] : histogram) h[std::to_string(rank)] = count;
  j["threshold_f1"] = report.threshold_f1;
  return j.dump(2) + "\n";
}

}  // namespace bqa
