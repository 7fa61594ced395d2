#include "reentry/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "reentry/labeling.hpp"

namespace reentry::eval {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with average ranks over tied scores.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: need at least one positive and one negative label");
  }
  const double p = static_cast<double>(n_pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

MetricReport classify_metrics(std::span<const double> scores, std::span<const int> labels,
                              double threshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("metrics: length mismatch");
  if (scores.empty()) throw std::invalid_argument("metrics: no instances");
  MetricReport r;
  r.threshold = threshold;
  r.n_instances = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    else if (predicted) ++r.fp;
    else if (actual) ++r.fn;
    else ++r.tn;
  }
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  r.acc = d(r.tp + r.tn) / d(r.n_instances);
  r.pre = r.tp + r.fp == 0 ? 0.0 : d(r.tp) / d(r.tp + r.fp);
  r.rec = r.tp + r.fn == 0 ? 0.0 : d(r.tp) / d(r.tp + r.fn);
  r.f1 = r.pre + r.rec > 0.0 ? 2.0 * r.pre * r.rec / (r.pre + r.rec) : 0.0;
  return r;
}

MetricReport evaluate(std::span<const double> scores, std::span<const int> labels,
                      double threshold) {
  auto r = classify_metrics(scores, labels, threshold);
  if (r.tp + r.fn > 0 && r.fp + r.tn > 0) r.auc = auc(scores, labels);
  return r;
}

PatternBreakdown pattern_breakdown(const std::vector<corpus::Instance>& instances,
                                   std::span<const double> scores, std::size_t min_count,
                                   double threshold) {
  if (instances.size() != scores.size()) {
    throw std::invalid_argument("pattern_breakdown: scores not aligned with instances");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    groups[labeling::thread_pattern(instances[i].context)].push_back(i);
  }
  std::map<std::string, std::vector<std::size_t>> merged;
  for (auto& [pattern, idx] : groups) {
    auto& dst = merged[idx.size() < min_count ? "other" : pattern];
    dst.insert(dst.end(), idx.begin(), idx.end());
  }
  PatternBreakdown out;
  for (auto& [pattern, idx] : merged) {
    std::sort(idx.begin(), idx.end());
    std::vector<double> s;
    std::vector<int> y;
    for (auto i : idx) {
      s.push_back(scores[i]);
      y.push_back(instances[i].y_main);
    }
    out[pattern] = evaluate(s, y, threshold);
  }
  return out;
}

std::optional<std::size_t> epochs_to_reach(std::span<const double> per_epoch, double target) {
  for (std::size_t e = 0; e < per_epoch.size(); ++e) {
    if (per_epoch[e] >= target) return e + 1;
  }
  return std::nullopt;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"acc", r.acc},         {"pre", r.pre}, {"rec", r.rec},
                      {"f1", r.f1},           {"n", r.n_instances},
                      {"threshold", r.threshold},
                      {"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
  j["auc"] = r.auc ? nlohmann::json(*r.auc) : nlohmann::json(nullptr);
  return j;
}

std::string tsv_header() { return "n\tauc\tacc\tpre\trec\tf1"; }

std::string to_tsv(const MetricReport& r) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(4);
  ss << r.n_instances << '\t';
  if (r.auc) {
    ss << *r.auc;
  } else {
    ss << "nan";
  }
  ss << '\t' << r.acc << '\t' << r.pre << '\t' << r.rec << '\t' << r.f1;
  return ss.str();
}

}  // namespace reentry::eval
