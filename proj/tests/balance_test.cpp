// Copyright 2026 The Unitforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <json.hpp>

#include "unitforge/balance.hpp"
#include "support.hpp"

namespace unitforge::balance {
namespace {

LanguageCounts counts(std::vector<double> n) {
  LanguageCounts c;
  for (std::size_t i = 0; i < n.size(); ++i) c.entries.emplace_back("l" + std::to_string(i), n[i]);
  return c;
}

TEST(Temperature, MatchesHighPrecisionOracle) {
  const auto cases = nlohmann::json::parse(testing::slurp(testing::fixture_dir() / "temperature_oracle.json"));
  ASSERT_FALSE(cases.empty());
  for (const auto& c : cases) {
    const auto d = temperature_distribution(counts(c["counts"].get<std::vector<double>>()),
                                            c["temperature"].get<double>());
    for (std::size_t i = 0; i < d.probs.size(); ++i)
      EXPECT_NEAR(d.probs[i].second, std::stod(c["probs"][i].get<std::string>()), 1e-12);
  }
}

TEST(Temperature, PaperSetting) {
  const auto d = temperature_distribution(counts({900, 100}), 20);
  EXPECT_NEAR(d.probs[0].second, 0.527438, 1e-6);
  EXPECT_NEAR(d.probs[1].second, 0.472562, 1e-6);
}

TEST(Temperature, ProportionalAtOne) {
  const auto d = temperature_distribution(counts({900, 100}), 1);
  EXPECT_EQ(d.probs[0].second, 0.9);
  EXPECT_EQ(d.probs[1].second, 0.1);
}

TEST(Temperature, EqualCountsUniform) {
  for (double t : {0.5, 1.0, 20.0, 1e6}) {
    const auto d = temperature_distribution(counts({7, 7, 7}), t);
    for (const auto& p : d.probs) EXPECT_NEAR(p.second, 1.0 / 3, 1e-15);
  }
}

TEST(Temperature, Invariants) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> n(2 + rng.uniform_index(8));
    for (auto& x : n) x = 1 + rng.uniform01() * 1e4;
    const auto c = counts(n);
    double prev_max = 2;
    for (double t : {0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
      const auto d = temperature_distribution(c, t);
      double sum = 0, mx = 0;
      for (const auto& p : d.probs) {
        EXPECT_GT(p.second, 0);
        EXPECT_LE(p.second, 1);
        sum += p.second;
        mx = std::max(mx, p.second);
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_LT(mx, prev_max);
      prev_max = mx;
    }
    auto scaled = n;
    for (auto& x : scaled) x *= 1000;
    const auto a = temperature_distribution(c, 20), b = temperature_distribution(counts(scaled), 20);
    for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(a.probs[i].second, b.probs[i].second, 1e-15);
    const auto u = temperature_distribution(c, 1e6);
    for (const auto& p : u.probs) EXPECT_LT(std::abs(p.second - 1.0 / n.size()), 1e-4);
  }
}

TEST(Temperature, ZeroCountsExcluded) {
  const auto d = temperature_distribution(counts({10, 0, 30}), 5);
  EXPECT_EQ(d.probs[1].second, 0.0);
  EXPECT_NEAR(d.probs[0].second + d.probs[2].second, 1.0, 1e-15);
}

TEST(Temperature, Errors) {
  EXPECT_THROW(temperature_distribution(counts({1, 2}), 0), ValidationError);
  EXPECT_THROW(temperature_distribution(counts({1, 2}), -1), ValidationError);
  EXPECT_THROW(temperature_distribution(counts({0, 0}), 1), ValidationError);
  EXPECT_THROW(temperature_distribution(counts({}), 1), ValidationError);
  EXPECT_THROW(temperature_distribution(counts({1, -2}), 1), ValidationError);
  LanguageCounts dup;
  dup.entries = {{"a", 1}, {"a", 2}};
  EXPECT_THROW(temperature_distribution(dup, 1), ValidationError);
}

TEST(Schedule, Basics) {
  const auto d = temperature_distribution(counts({900, 100}), 20);
  std::map<std::string, std::vector<std::string>> pools = {{"l0", {"a", "b"}}, {"l1", {"c"}}};
  EXPECT_TRUE(sample_schedule(d, pools, 0, 1).empty());
  EXPECT_EQ(sample_schedule(d, pools, 500, 9), sample_schedule(d, pools, 500, 9));
  EXPECT_NE(sample_schedule(d, pools, 500, 9), sample_schedule(d, pools, 500, 10));
  const auto one = temperature_distribution(counts({5}), 3);
  for (const auto& id : sample_schedule(one, {{"l0", {"x", "y"}}}, 100, 2)) EXPECT_TRUE(id == "x" || id == "y");
  EXPECT_THROW(sample_schedule(d, {{"l0", {"a"}}}, 5, 1), ValidationError);
  EXPECT_THROW(sample_schedule(d, {{"l0", {"a"}}, {"l1", {}}}, 5, 1), ValidationError);
}

TEST(Schedule, LawOfLargeNumbers) {
  const auto d = temperature_distribution(counts({900, 100}), 20);
  std::map<std::string, std::vector<std::string>> pools = {{"l0", {"a0", "a1", "a2"}}, {"l1", {"b0"}}};
  const auto s = sample_schedule(d, pools, 100000, 1234);
  ASSERT_EQ(s.size(), 100000u);
  const auto n0 = std::count_if(s.begin(), s.end(), [](const auto& id) { return id[0] == 'a'; });
  EXPECT_NEAR(n0 / 1e5, d.probs[0].second, 0.01);
  const auto a1 = std::count(s.begin(), s.end(), "a1");
  EXPECT_NEAR(static_cast<double>(a1) / n0, 1.0 / 3, 0.02);
}

TEST(Counts, ReadTable) {
  testing::ScratchDir dir("counts");
  testing::spit(dir / "c.tsv", "lang\tamount\nzh\t900\nnan\t100.5\n");
  const auto c = read_counts(dir / "c.tsv");
  ASSERT_EQ(c.entries.size(), 2u);
  EXPECT_EQ(c.entries[1], (std::pair<std::string, double>{"nan", 100.5}));
  testing::spit(dir / "bad.tsv", "zh\t9\nnan\tx\n");
  EXPECT_THROW(read_counts(dir / "bad.tsv"), ParseError);
}

}  // namespace
}  // namespace unitforge::balance
