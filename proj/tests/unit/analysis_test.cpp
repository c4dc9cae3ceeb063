// Copyright 2026 The SwipeQoE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "swipeqoe/analysis.hpp"
#include "swipeqoe/raters.hpp"
#include "test_support.hpp"

namespace sq = swipeqoe;

namespace {

std::vector<sq::TrueMos> design_truth() {
  std::vector<sq::TrueMos> out;
  for (const auto& item : sq::testing::labeled_design(sq::kPublishedCoefficients)) {
    out.push_back({item.id, std::clamp(item.mos, 1.0, 5.0)});
  }
  return out;
}

sq::RatingTable with_extra(const sq::RatingTable& base, const std::string& rater,
                           const std::vector<std::pair<std::string, int>>& scores) {
  sq::RatingTable out = base;
  for (const auto& [stimulus, score] : scores) out.add({rater, stimulus, score, "0"});
  return out;
}

std::vector<std::pair<std::string, int>> scores_of(const sq::RatingTable& t,
                                                   const std::string& rater) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& e : t.entries()) {
    if (e.rater_id == rater) out.push_back({e.stimulus_id, e.score});
  }
  return out;
}

bool removed(const sq::ScreeningResult& r, const std::string& id,
             sq::RemovalReason* reason = nullptr) {
  for (const auto& x : r.removed) {
    if (x.rater_id == id) {
      if (reason) *reason = x.reason;
      return true;
    }
  }
  return false;
}

}  // namespace

TEST(RatingTable, RejectsInvalidEntries) {
  sq::RatingTable t;
  t.add({"a", "s1", 3, "0"});
  EXPECT_THROW(t.add({"a", "s1", 4, "0"}), sq::Error);
  EXPECT_THROW(t.add({"a", "s2", 6, "0"}), sq::Error);
  EXPECT_THROW(t.add({"a", "s2", 0, "0"}), sq::Error);
  EXPECT_THROW(t.add({"a,b", "s2", 3, "0"}), sq::Error);
  EXPECT_THROW(t.add({"", "s2", 3, "0"}), sq::Error);
  EXPECT_EQ(t.size(), 1u);
}

TEST(RatingsFile, RoundTripAndErrorsWithPosition) {
  sq::RatingTable t;
  t.add({"p1", "tau2_D0_P0", 5, "1700000000000"});
  t.add({"p1", "tau2_D1_P1", 2, "1700000000001"});
  const std::string text = sq::serialize_ratings(t);
  EXPECT_EQ(text.rfind("#swipeqoe-ratings v1\nrater_id,stimulus_id,score,timestamp\n", 0), 0u);
  const auto back = sq::parse_ratings(text, "r.csv");
  EXPECT_EQ(sq::serialize_ratings(back), text);

  auto error_at = [](const std::string& body) {
    try {
      sq::parse_ratings("#swipeqoe-ratings v1\nrater_id,stimulus_id,score,timestamp\n" + body,
                        "r.csv");
    } catch (const sq::Error& e) {
      EXPECT_EQ(e.code(), sq::ErrorCode::kParse);
      return std::make_pair(e.line(), e.column());
    }
    return std::make_pair(std::size_t{0}, std::size_t{0});
  };
  EXPECT_EQ(error_at("a,s1,3,0\na,s2,7,0\n"), std::make_pair(std::size_t{4}, std::size_t{6}));
  EXPECT_EQ(error_at("a,s1,x,0\n"), std::make_pair(std::size_t{3}, std::size_t{6}));
  EXPECT_EQ(error_at("a,s1,3\n").first, 3u);
  EXPECT_EQ(error_at("a,s1,3,0\na,s1,4,0\n").first, 4u);
  EXPECT_EQ(error_at(",s1,3,0\n"), std::make_pair(std::size_t{3}, std::size_t{1}));

  try {
    sq::parse_ratings("#swipeqoe-ratings v9\nrater_id,stimulus_id,score,timestamp\n", "r.csv");
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Screening, KeepsRaterMatchingPanelMos) {
  const auto sim = sq::simulate_ratings(design_truth(), 0.132, sq::make_panel(20, 0, 1));
  std::map<std::string, std::pair<int, int>> sums;
  for (const auto& e : sim.table.entries()) {
    sums[e.stimulus_id].first += e.score;
    sums[e.stimulus_id].second += 1;
  }
  std::vector<std::pair<std::string, int>> rounded;
  for (const auto& [id, s] : sums) {
    rounded.push_back({id, static_cast<int>(std::lround(static_cast<double>(s.first) / s.second))});
  }
  const auto result = sq::screen_raters(with_extra(sim.table, "echo", rounded));
  EXPECT_FALSE(removed(result, "echo"));
  ASSERT_TRUE(result.kept_correlation.at("echo").has_value());
  EXPECT_GT(*result.kept_correlation.at("echo"), 0.9);
}

TEST(Screening, RemovesPermutedRaterAcrossSeeds) {
  const auto truth = design_truth();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto sim = sq::simulate_ratings(truth, 0.132, sq::make_panel(20, 0, seed));
    auto copied = scores_of(sim.table, "c01");
    std::vector<int> values;
    for (const auto& [id, s] : copied) values.push_back(s);
    std::mt19937_64 rng(seed);
    std::shuffle(values.begin(), values.end(), rng);
    for (std::size_t i = 0; i < copied.size(); ++i) copied[i].second = values[i];
    const auto result = sq::screen_raters(with_extra(sim.table, "perm", copied));
    sq::RemovalReason reason{};
    EXPECT_TRUE(removed(result, "perm", &reason)) << "seed " << seed;
    EXPECT_EQ(reason, sq::RemovalReason::kLowCorrelation);
  }
}

TEST(Screening, RemovesConstantRaterWithZeroVarianceReason) {
  const auto sim = sq::simulate_ratings(design_truth(), 0.132, sq::make_panel(20, 0, 3, 1));
  const auto result = sq::screen_raters(sim.table);
  sq::RemovalReason reason{};
  ASSERT_TRUE(removed(result, "k01", &reason));
  EXPECT_EQ(reason, sq::RemovalReason::kZeroVariance);
}

TEST(Screening, RequiresThreeRatingsPerRater) {
  sq::RatingTable t;
  t.add({"a", "s1", 1, "0"});
  t.add({"a", "s2", 2, "0"});
  EXPECT_THROW(sq::screen_raters(t), sq::Error);
}

TEST(Screening, LoweringThresholdNeverRemovesMore) {
  const auto truth = design_truth();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sim = sq::simulate_ratings(truth, 0.6, sq::make_panel(12, 3, seed));
    std::size_t previous = 0;
    for (double threshold = -0.5; threshold <= 0.95; threshold += 0.05) {
      const auto r = sq::screen_raters(sim.table, threshold);
      EXPECT_GE(r.removed.size(), previous) << "threshold " << threshold;
      previous = r.removed.size();
      EXPECT_LE(r.rounds, sq::kMaxScreeningRounds);
    }
  }
}

TEST(Mos, WorkedExamples) {
  sq::RatingTable t;
  for (int i = 0; i < 4; ++i) t.add({"r" + std::to_string(i), "flat", 3, "0"});
  t.add({"a", "wide", 1, "0"});
  t.add({"b", "wide", 5, "0"});
  t.add({"a", "single", 4, "0"});
  const auto recs = sq::compute_mos(t);
  ASSERT_EQ(recs.size(), 3u);
  const auto& flat = recs[0];
  EXPECT_EQ(flat.stimulus_id, "flat");
  EXPECT_EQ(flat.mos, 3.0);
  EXPECT_EQ(flat.sos, 0.0);
  EXPECT_EQ(*flat.ci_halfwidth, 0.0);

  const auto& single = recs[1];
  EXPECT_TRUE(single.flagged());
  EXPECT_EQ(single.n, 1u);

  const auto& wide = recs[2];
  EXPECT_EQ(wide.mos, 3.0);
  EXPECT_NEAR(wide.sos, std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(sq::t_quantile_975(1), 12.7062, 1e-4);
  EXPECT_NEAR(*wide.ci_halfwidth, 12.706204736 * std::sqrt(8.0) / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(*wide.ci_halfwidth, 25.41, 0.01);
}

TEST(Mos, TQuantileMatchesTables) {
  EXPECT_NEAR(sq::t_quantile_975(19), 2.093, 1e-3);
  EXPECT_NEAR(sq::t_quantile_975(10), 2.228, 1e-3);
  EXPECT_NEAR(sq::t_quantile_975(1000), 1.962, 1e-3);
}

TEST(Mos, InvariantToRaterOrder) {
  const auto sim = sq::simulate_ratings(design_truth(), 0.132, sq::make_panel(20, 0, 9));
  auto entries = sim.table.entries();
  std::mt19937_64 rng(1);
  std::shuffle(entries.begin(), entries.end(), rng);
  sq::RatingTable shuffled;
  for (const auto& e : entries) shuffled.add(e);
  const auto a = sq::compute_mos(sim.table);
  const auto b = sq::compute_mos(shuffled);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].stimulus_id, b[i].stimulus_id);
    EXPECT_EQ(a[i].mos, b[i].mos);
    EXPECT_EQ(a[i].sos, b[i].sos);
    EXPECT_EQ(a[i].ci_halfwidth, b[i].ci_halfwidth);
  }
}

TEST(Mos, FileRoundTrip) {
  const auto sim = sq::simulate_ratings(design_truth(), 0.132, sq::make_panel(20, 0, 4));
  auto recs = sq::compute_mos(sim.table);
  recs.push_back({"lonely", 4.0, 1, std::nullopt, 0.0});
  const std::string text = sq::serialize_mos(recs);
  const auto back = sq::parse_mos(text, "m.csv");
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].mos, recs[i].mos);
    EXPECT_EQ(back[i].sos, recs[i].sos);
    EXPECT_EQ(back[i].ci_halfwidth, recs[i].ci_halfwidth);
  }
  EXPECT_THROW(sq::parse_mos("#swipeqoe-mos v1\nstimulus_id,mos,n,ci_halfwidth,sos\ns,6,2,0,0\n",
                             "m.csv"),
               sq::Error);
}

TEST(Sos, WorkedExamples) {
  std::vector<sq::MosRecord> exact;
  for (double mos : {1.5, 2.0, 2.7, 3.0, 3.9, 4.6}) {
    const double x = (mos - 1) * (5 - mos);
    exact.push_back({"s", mos, 20, 0.1, std::sqrt(0.132 * x)});
  }
  EXPECT_NEAR(sq::fit_sos(exact).a, 0.132, 1e-12);

  for (auto& r : exact) r.sos = 0.0;
  EXPECT_EQ(sq::fit_sos(exact).a, 0.0);

  const std::vector<sq::MosRecord> single = {{"s", 3.0, 20, 0.1, std::sqrt(0.528)}};
  EXPECT_NEAR(sq::fit_sos(single).a, 0.132, 1e-12);
  EXPECT_EQ(sq::fit_sos(single).records_used, 1u);
}

TEST(Sos, ScaleExtremesAreUnfittable) {
  const std::vector<sq::MosRecord> ends = {{"a", 1.0, 20, 0.0, 0.0}, {"b", 5.0, 20, 0.0, 0.0}};
  try {
    sq::fit_sos(ends);
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.code(), sq::ErrorCode::kUnidentifiable);
  }
}
