#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bibleqa/data_pipeline.hpp"

namespace bqa {

// Scores of one question group, in the group's candidate order.
struct QuestionPrediction {
  std::size_t qid = 0;
  std::string translation;
  std::vector<double> scores;
  std::size_t gold = 0;
};

using PredictionSet = std::vector<QuestionPrediction>;

// 1-based position of the gold candidate after a stable descending sort.
std::size_t rank_candidates(const std::vector<double>& scores, std::size_t gold);

// argmax, lowest index on ties.
std::size_t select_answer(const std::vector<double>& scores);

struct F1Result {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// One predicted positive (the argmax) and one gold per question.
F1Result f1_top1(const PredictionSet& preds);
double mrr(const PredictionSet& preds);

// Binary F1 with every candidate scored >= threshold predicted positive.
// Diagnostic only.
F1Result threshold_f1(const PredictionSet& preds, double threshold = 0.5);

// Independent uniform [0, 1) scores per candidate from Rng(seed).
PredictionSet random_baseline(const std::vector<QuestionGroup>& groups, std::uint64_t seed);

struct EvalReport {
  std::size_t n = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double mrr = 0.0;
  double threshold_f1 = 0.0;
  std::vector<std::size_t> ranks;
};

EvalReport evaluate(const PredictionSet& preds);

struct ReportContext {
  std::string model;
  std::string dataset;
  std::string translation = "all";
  std::uint64_t seed = 0;
};

// {model, dataset, translation, n, f1, precision, recall, mrr, seed, ranks_histogram, ...}
std::string report_json(const EvalReport& report, const ReportContext& ctx);

}  // namespace bqa
