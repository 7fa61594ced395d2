#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "reentry/corpus.hpp"
#include "reentry/labeling.hpp"

using namespace reentry;
using namespace reentry::labeling;
using testing::turns_of;

namespace {

// Brute-force oracles written directly from the label definitions.
int sp_oracle(const std::vector<std::string>& a) {
  return std::set<std::string>(a.begin(), a.end()).size() <= 2 ? 1 : 0;
}

int rt_oracle(const std::vector<std::string>& a) {
  return std::count(a.begin(), a.end(), a.back()) >= 2 ? 1 : 0;
}

std::vector<int> ta_oracle(const std::vector<std::string>& a) {
  std::vector<int> y;
  for (std::size_t j = 0; j + 1 < a.size(); ++j) y.push_back(a[j] == a.back());
  return y;
}

int reentry_oracle(const std::vector<std::string>& all, std::size_t m) {
  int later = 0;
  for (std::size_t j = m; j < all.size(); ++j) later += all[j] == all[m - 1];
  return later > 0;
}

}  // namespace

TEST_CASE("thread patterns") {
  CHECK(thread_pattern(turns_of({"u5", "u9", "u5"})) == "ABA");
  CHECK(thread_pattern(turns_of({"x", "y", "z", "x"})) == "ABCA");
  CHECK(thread_pattern(turns_of({"q"})) == "A");
  CHECK_THROWS(thread_pattern(std::vector<corpus::UserId>{}));

  std::vector<corpus::UserId> many;
  for (int i = 0; i < 28; ++i) many.push_back("p" + std::to_string(i));
  many.push_back("p0");
  const auto p = thread_pattern(many);
  CHECK(p.substr(0, 26) == "ABCDEFGHIJKLMNOPQRSTUVWXYZ");
  CHECK(p.substr(26) == "A1A2A");
}

TEST_CASE("sp examples") {
  CHECK(sp_label(turns_of({"a", "b", "a", "b"})) == 1);
  CHECK(sp_label(turns_of({"a", "b", "c"})) == 0);
  CHECK(sp_label(turns_of({"a"})) == 1);
}

TEST_CASE("rt examples") {
  CHECK(rt_label(turns_of({"a", "b", "a"}), "a") == 1);
  CHECK(rt_label(turns_of({"a", "b"}), "b") == 0);
  CHECK(rt_label(turns_of({"x", "y", "z", "x"}), "x") == 1);
  CHECK_THROWS_AS(rt_label(turns_of({"a", "b"}), "a"), std::invalid_argument);
}

TEST_CASE("ta examples") {
  CHECK(ta_labels(turns_of({"x", "y", "z", "x"}), "x") == std::vector<int>{1, 0, 0});
  CHECK(ta_labels(turns_of({"a", "b"}), "b") == std::vector<int>{0});
  CHECK(ta_labels(turns_of({"a", "b", "a", "b"}), "b") == std::vector<int>{0, 1, 0});
  CHECK_THROWS(ta_labels(turns_of({"a"}), "a"));
  CHECK_THROWS(ta_labels(turns_of({"a", "b"}), "a"));
}

TEST_CASE("labels agree with brute-force oracles on random sequences") {
  Rng rng(11);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto all = testing::random_authors(rng, 12, 5);
    if (all.size() < 2) continue;
    const auto turns = turns_of(all);
    for (std::size_t m = 2; m <= all.size(); ++m) {
      const std::vector<std::string> prefix(all.begin(), all.begin() + static_cast<long>(m));
      const auto ctx = turns_of(prefix);
      const auto& target = prefix.back();
      mismatches += sp_label(ctx) != sp_oracle(prefix);
      mismatches += rt_label(ctx, target) != rt_oracle(prefix);
      const auto ta = ta_labels(ctx, target);
      mismatches += ta != ta_oracle(prefix);
      mismatches += reentry_label(turns, m) != reentry_oracle(all, m);
      // At least one earlier target turn exactly when RT is positive.
      const int sum = std::accumulate(ta.begin(), ta.end(), 0);
      CHECK((sum >= 1) == (rt_label(ctx, target) == 1));
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("patterns are invariant under renaming users") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = testing::random_authors(rng, 10, 6);
    std::map<std::string, std::string> rename;
    std::vector<std::string> b;
    for (const auto& u : a) {
      auto it = rename.find(u);
      if (it == rename.end()) it = rename.emplace(u, "zz" + std::to_string(rng.next() % 100000)).first;
      b.push_back(it->second);
    }
    // Skip the rare draw that maps two users to the same name.
    if (std::set<std::string>(b.begin(), b.end()).size() != rename.size()) continue;
    CHECK(thread_pattern(a) == thread_pattern(b));
  }
}

TEST_CASE("task parsing") {
  CHECK(parse_tasks("") == TaskSet{});
  CHECK(parse_tasks("ta") == TaskSet{false, false, true});
  CHECK(parse_tasks("sp, RT,ta") == TaskSet{true, true, true});
  CHECK_THROWS_AS(parse_tasks("sp,xx"), std::invalid_argument);
  CHECK(format_tasks({true, false, true}) == "sp,ta");
  CHECK(format_tasks({}) == "");
}

TEST_CASE("label inversion") {
  auto inst = corpus::extract_instances({testing::make_conv("c", {"a", "b", "c", "a"})})[2];
  REQUIRE(inst.y_ta == std::vector<int>{1, 0, 0});
  inst.y_sp = 1;

  auto sp = invert_labels(inst, {true, false, false});
  CHECK(sp.y_sp == 0);
  CHECK(sp.y_rt == inst.y_rt);
  CHECK(sp.y_ta == inst.y_ta);
  CHECK(sp.y_main == inst.y_main);

  CHECK(invert_labels(inst, {false, false, true}).y_ta == std::vector<int>{0, 1, 1});
  CHECK(corpus::to_json(invert_labels(inst, {})) == corpus::to_json(inst));
  for (const TaskSet t : {TaskSet{true, false, false}, TaskSet{false, true, false},
                          TaskSet{false, false, true}, TaskSet{true, true, true}}) {
    CHECK(corpus::to_json(invert_labels(invert_labels(inst, t), t)) == corpus::to_json(inst));
  }
}

TEST_CASE("pattern statistics") {
  std::vector<corpus::Instance> instances;
  for (int i = 0; i < 100; ++i) {
    corpus::Instance inst;
    inst.context = turns_of({"a", "b"});
    inst.y_main = i < 27 ? 1 : 0;
    instances.push_back(inst);
  }
  auto stats = pattern_stats(instances);
  REQUIRE(stats.size() == 1);
  CHECK(stats["AB"].count == 100);
  CHECK(stats["AB"].rate() == doctest::Approx(0.27));
  CHECK(stats.count("ABC") == 0);

  for (auto& inst : instances) inst.y_main = 1;
  CHECK(pattern_stats(instances)["AB"].rate() == 1.0);
}
