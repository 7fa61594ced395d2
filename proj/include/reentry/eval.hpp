#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reentry/corpus.hpp"

namespace reentry::eval {

struct MetricReport {
  std::optional<double> auc;  // absent when only one class is present
  double acc = 0.0;
  double pre = 0.0;
  double rec = 0.0;
  double f1 = 0.0;
  std::size_t n_instances = 0;
  double threshold = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Probability that a random positive outscores a random negative, ties
// counting one half. Throws std::invalid_argument on single-class input.
double auc(std::span<const double> scores, std::span<const int> labels);

// Confusion-matrix metrics; a score >= threshold predicts positive. Precision
// is 0 without positive predictions, recall 0 without positive labels.
MetricReport classify_metrics(std::span<const double> scores, std::span<const int> labels,
                              double threshold = 0.5);

// classify_metrics plus AUC when both classes occur.
MetricReport evaluate(std::span<const double> scores, std::span<const int> labels,
                      double threshold = 0.5);

using PatternBreakdown = std::map<std::string, MetricReport>;

// Groups by thread pattern of each instance's context; groups with fewer
// than min_count instances are pooled under "other".
PatternBreakdown pattern_breakdown(const std::vector<corpus::Instance>& instances,
                                   std::span<const double> scores, std::size_t min_count = 10,
                                   double threshold = 0.5);

// 1-based index of the first epoch whose value reaches target.
std::optional<std::size_t> epochs_to_reach(std::span<const double> per_epoch, double target);

nlohmann::json to_json(const MetricReport& r);
std::string tsv_header();
std::string to_tsv(const MetricReport& r);

}  // namespace reentry::eval
