#pragma once

#include <map>
#include <string>
#include <vector>

#include "reentry/corpus.hpp"

namespace reentry::labeling {

// Canonical author-sequence encoding: the i-th distinct author by first
// appearance is the i-th letter. Authors beyond the 26th are written "A1",
// "A2", ... so the 27th distinct author is "A1".
std::string thread_pattern(const std::vector<corpus::Turn>& context);
std::string thread_pattern(const std::vector<corpus::UserId>& authors);

// 1 for a focused context (at most two distinct authors), else 0.
int sp_label(const std::vector<corpus::Turn>& context);

// 1 when the target authored a turn before the final one. The final turn must
// be the target's.
int rt_label(const std::vector<corpus::Turn>& context, const corpus::UserId& target);

// Element j is 1 iff turn j (final turn excluded) was written by the target.
std::vector<int> ta_labels(const std::vector<corpus::Turn>& context,
                           const corpus::UserId& target);

// 1 iff the author of turns[m-1] posts again in turns[m..].
int reentry_label(const std::vector<corpus::Turn>& turns, std::size_t m);

struct TaskSet {
  bool sp = false;
  bool rt = false;
  bool ta = false;

  bool any() const { return sp || rt || ta; }
  bool operator==(const TaskSet&) const = default;
};

// Parses "sp,rt,ta" (any subset, empty string for none).
TaskSet parse_tasks(const std::string& csv);
std::string format_tasks(const TaskSet& tasks);

corpus::Instance invert_labels(corpus::Instance instance, const TaskSet& tasks);

struct PatternCount {
  std::size_t count = 0;
  std::size_t positives = 0;
  double rate() const { return count == 0 ? 0.0 : static_cast<double>(positives) / count; }
};

using PatternStats = std::map<std::string, PatternCount>;

PatternStats pattern_stats(const std::vector<corpus::Instance>& instances);

}  // namespace reentry::labeling
