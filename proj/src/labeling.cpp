#include "reentry/labeling.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace reentry::labeling {

namespace {

std::string letter(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "A" + std::to_string(i - 25);
}

void require_target_last(const std::vector<corpus::Turn>& context, const corpus::UserId& target,
                         const char* op) {
  if (context.empty() || context.back().author != target) {
    throw std::invalid_argument(std::string(op) +
                                ": final context turn must be authored by the target");
  }
}

}  // namespace

std::string thread_pattern(const std::vector<corpus::UserId>& authors) {
  if (authors.empty()) throw std::invalid_argument("thread_pattern: empty context");
  std::unordered_map<corpus::UserId, std::size_t> seen;
  std::string out;
  for (const auto& a : authors) {
    auto [it, fresh] = seen.emplace(a, seen.size());
    out += letter(it->second);
  }
  return out;
}

std::string thread_pattern(const std::vector<corpus::Turn>& context) {
  std::vector<corpus::UserId> authors;
  authors.reserve(context.size());
  for (const auto& t : context) authors.push_back(t.author);
  return thread_pattern(authors);
}

int sp_label(const std::vector<corpus::Turn>& context) {
  if (context.empty()) throw std::invalid_argument("sp_label: empty context");
  std::unordered_set<corpus::UserId> users;
  for (const auto& t : context) {
    users.insert(t.author);
    if (users.size() > 2) return 0;
  }
  return 1;
}

int rt_label(const std::vector<corpus::Turn>& context, const corpus::UserId& target) {
  require_target_last(context, target, "rt_label");
  for (std::size_t j = 0; j + 1 < context.size(); ++j) {
    if (context[j].author == target) return 1;
  }
  return 0;
}

std::vector<int> ta_labels(const std::vector<corpus::Turn>& context,
                           const corpus::UserId& target) {
  require_target_last(context, target, "ta_labels");
  if (context.size() < 2) throw std::invalid_argument("ta_labels: context needs >= 2 turns");
  std::vector<int> labels(context.size() - 1);
  for (std::size_t j = 0; j + 1 < context.size(); ++j) {
    labels[j] = context[j].author == target ? 1 : 0;
  }
  return labels;
}

int reentry_label(const std::vector<corpus::Turn>& turns, std::size_t m) {
  if (m == 0 || m > turns.size()) throw std::out_of_range("reentry_label: position out of range");
  const auto& target = turns[m - 1].author;
  for (std::size_t j = m; j < turns.size(); ++j) {
    if (turns[j].author == target) return 1;
  }
  return 0;
}

TaskSet parse_tasks(const std::string& csv) {
  TaskSet tasks;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    std::transform(item.begin(), item.end(), item.begin(), ::tolower);
    if (item.empty()) continue;
    if (item == "sp") {
      tasks.sp = true;
    } else if (item == "rt") {
      tasks.rt = true;
    } else if (item == "ta") {
      tasks.ta = true;
    } else {
      throw std::invalid_argument("unknown task '" + item + "' (expected sp, rt, ta)");
    }
  }
  return tasks;
}

std::string format_tasks(const TaskSet& tasks) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(tasks.sp, "sp");
  add(tasks.rt, "rt");
  add(tasks.ta, "ta");
  return s;
}

corpus::Instance invert_labels(corpus::Instance instance, const TaskSet& tasks) {
  if (tasks.sp) instance.y_sp = 1 - instance.y_sp;
  if (tasks.rt) instance.y_rt = 1 - instance.y_rt;
  if (tasks.ta)
    for (auto& y : instance.y_ta) y = 1 - y;
  return instance;
}

PatternStats pattern_stats(const std::vector<corpus::Instance>& instances) {
  PatternStats stats;
  for (const auto& inst : instances) {
    auto& entry = stats[thread_pattern(inst.context)];
    ++entry.count;
    if (inst.y_main == 1) ++entry.positives;
  }
  return stats;
}

}  // namespace reentry::labeling
