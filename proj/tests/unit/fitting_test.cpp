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

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "swipeqoe/baselines.hpp"
#include "swipeqoe/fitting.hpp"
#include "test_support.hpp"

namespace sq = swipeqoe;
using sq::testing::labeled_design;

namespace {

const sq::ModelCoefficients kPlanted{4.5, -0.1, 0.5, -0.2};

sq::BaselineRegistry registry() {
  return sq::load_baseline_registry(std::string(SWIPEQOE_DATA_DIR) + "/baseline_params.json");
}

}  // namespace

TEST(Fit, NoiselessRecovery) {
  const auto fit = sq::fit_proposed(labeled_design(kPlanted), {});
  EXPECT_NEAR(fit.lambda, 0.5, 1e-3);
  EXPECT_NEAR(fit.alpha, 4.5, 1e-6);
  EXPECT_NEAR(fit.beta, -0.1, 1e-6);
  EXPECT_NEAR(fit.gamma, -0.2, 1e-6);
}

TEST(Fit, RecoversPublishedCoefficientsToo) {
  const auto fit = sq::fit_proposed(labeled_design(sq::kPublishedCoefficients), {});
  EXPECT_NEAR(fit.lambda, 0.55, 1e-3);
  EXPECT_NEAR(fit.alpha, 4.52, 1e-6);
  EXPECT_NEAR(fit.beta, -0.10, 1e-6);
  EXPECT_NEAR(fit.gamma, -0.23, 1e-6);
}

// Asymptotic standard errors of (alpha, beta, lambda, gamma) for Gaussian
// noise: sigma^2 (J^T J)^-1 with J the Jacobian of the model at the truth.
Eigen::Vector4d asymptotic_standard_errors(const sq::ModelCoefficients& c, double sigma) {
  Eigen::Matrix4d info = Eigen::Matrix4d::Zero();
  for (const auto& item : labeled_design(c)) {
    const auto pos = item.session.positions();
    const double total = sq::to_double(item.session.total_media_duration());
    double w = 0.0, dw = 0.0;
    for (std::size_t k = 0; k + 1 < item.session.size(); ++k) {
      const double t = sq::to_double(pos[k]) / total;
      const double d = sq::to_double(item.session.delays()[k]);
      w += d * std::exp(c.lambda * t);
      dw += d * t * std::exp(c.lambda * t);
    }
    const Eigen::Vector4d j(1.0, w, c.beta * dw, static_cast<double>(item.session.delay_count()));
    info += j * j.transpose();
  }
  const Eigen::Matrix4d cov = sigma * sigma * info.inverse();
  return cov.diagonal().cwiseSqrt();
}

TEST(Fit, NoisyRecoveryMatchesAsymptoticSpread) {
  const Eigen::Vector4d se = asymptotic_standard_errors(kPlanted, 0.1);
  const int trials = 60;
  std::array<int, 4> inside{};
  for (int seed = 1; seed <= trials; ++seed) {
    const auto f = sq::fit_proposed(labeled_design(kPlanted, 0.1, seed), {});
    const std::array<double, 4> err = {f.alpha - 4.5, f.beta + 0.1, f.lambda - 0.5, f.gamma + 0.2};
    for (int k = 0; k < 4; ++k) inside[k] += std::abs(err[k]) <= 1.96 * se[k] ? 1 : 0;
  }
  // Nominal 95% per parameter; allow sampling slack over 60 trials.
  for (int k = 0; k < 4; ++k) EXPECT_GE(inside[k], 52) << "parameter " << k;
}

TEST(Fit, ZeroDelayDataIsUnidentifiable) {
  std::vector<sq::LabeledSession> flat;
  for (const auto& item : labeled_design(kPlanted)) {
    if (item.session.delay_count() == 0) flat.push_back(item);
  }
  ASSERT_EQ(flat.size(), 4u);
  try {
    sq::fit_proposed(flat, {});
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.code(), sq::ErrorCode::kUnidentifiable);
  }
}

TEST(Fit, TooFewDistinctStimuliIsUnidentifiable) {
  auto data = labeled_design(kPlanted);
  std::vector<sq::LabeledSession> few(data.begin() + 1, data.begin() + 4);
  few.push_back(few.front());
  EXPECT_THROW(sq::fit_proposed(few, {}), sq::Error);
}

TEST(Fit, NormalEquationsAreSatisfied) {
  const auto data = labeled_design(kPlanted, 0.1, 3);
  for (double lambda : {-0.7, 0.0, 0.55, 2.0, 4.5}) {
    const auto lin = sq::solve_linear_part(data, lambda);
    Eigen::MatrixXd x(data.size(), 3);
    Eigen::VectorXd y(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      double w = 0.0;
      const auto pos = data[i].session.positions();
      const double total = sq::to_double(data[i].session.total_media_duration());
      for (std::size_t k = 0; k + 1 < data[i].session.size(); ++k) {
        w += sq::to_double(data[i].session.delays()[k]) *
             std::exp(lambda * sq::to_double(pos[k]) / total);
      }
      x.row(i) << 1.0, w, static_cast<double>(data[i].session.delay_count());
      y[i] = data[i].mos;
    }
    const Eigen::Vector3d theta(lin.alpha, lin.beta, lin.gamma);
    const Eigen::Vector3d residual = x.transpose() * (x * theta - y);
    EXPECT_LT(residual.norm() / (x.transpose() * y).norm(), 1e-9) << lambda;
  }
}

TEST(Fit, RefinedMseNotAboveAnyGridMse) {
  for (int seed = 1; seed <= 5; ++seed) {
    const auto r = sq::fit_proposed_detailed(labeled_design(kPlanted, 0.2, seed), {});
    ASSERT_EQ(r.grid.size(), 601u);
    for (const auto& [lambda, mse] : r.grid) EXPECT_LE(r.mse, mse) << lambda;
    EXPECT_LE(std::abs(r.coefficients.lambda - r.grid_lambda), 0.01 + 1e-12);
  }
}

TEST(Fit, InvariantToInputOrder) {
  auto data = labeled_design(kPlanted, 0.1, 8);
  const auto base = sq::fit_proposed(data, {});
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(data.begin(), data.end(), rng);
    EXPECT_EQ(sq::fit_proposed(data, {}), base);
  }
}

TEST(FitConfig, Validation) {
  sq::FitConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(sq::FitConfig&)>>{
           [](auto& x) { x.lambda_min = 6; },
           [](auto& x) { x.lambda_step = 0; },
           [](auto& x) { x.train_fraction = 1.0; },
           [](auto& x) { x.train_fraction = 0.0; },
           [](auto& x) { x.repeats = 0; },
           [](auto& x) { x.refine_tolerance = -1; }}) {
    sq::FitConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), sq::Error);
  }
}

TEST(Splits, PermutationAndTrainSize) {
  EXPECT_EQ(sq::train_size_for(132, 0.8), 106u);
  EXPECT_EQ(sq::train_size_for(10, 0.99), 9u);
  EXPECT_EQ(sq::train_size_for(10, 0.01), 1u);
  for (int split = 0; split < 10; ++split) {
    auto p = sq::split_permutation(132, 7, split);
    EXPECT_EQ(p, sq::split_permutation(132, 7, split));
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
  }
  EXPECT_NE(sq::split_permutation(132, 7, 0), sq::split_permutation(132, 7, 1));
  EXPECT_NE(sq::split_permutation(132, 7, 0), sq::split_permutation(132, 8, 0));
}

TEST(Evaluate, SelfConsistentDataIsPerfect) {
  sq::FitConfig cfg;
  cfg.seed = 7;
  const auto report =
      sq::evaluate_protocol(labeled_design(sq::kPublishedCoefficients), registry(), cfg);
  EXPECT_EQ(report.train_size, 106u);
  int seen = 0;
  for (const auto& r : report.records) {
    if (r.model_id != sq::kProposedModelId) continue;
    ASSERT_EQ(r.status, sq::RecordStatus::kOk) << r.message;
    EXPECT_LT(r.metrics->rmse, 1e-9);
    EXPECT_NEAR(r.metrics->pcc, 1.0, 1e-12);
    ++seen;
  }
  EXPECT_EQ(seen, 20);
}

TEST(Evaluate, ReportsEveryModelAndAveragesOkRepeats) {
  sq::FitConfig cfg;
  cfg.seed = 3;
  const auto report = sq::evaluate_protocol(labeled_design(kPlanted, 0.15, 2), registry(), cfg);
  for (const char* id : {"p1203_3", "ols_cat"}) {
    const auto* agg = report.aggregate(id);
    ASSERT_NE(agg, nullptr);
    EXPECT_EQ(agg->repeats_ok, 0);
    EXPECT_FALSE(agg->metrics.has_value());
  }
  for (const auto& agg : report.aggregates) {
    double pcc = 0.0;
    int n = 0;
    for (const auto& r : report.records) {
      if (r.model_id == agg.model_id && r.partition == agg.partition &&
          r.status == sq::RecordStatus::kOk) {
        pcc += r.metrics->pcc;
        ++n;
      }
    }
    EXPECT_EQ(n, agg.repeats_ok);
    if (n > 0) EXPECT_NEAR(agg.metrics->pcc, pcc / n, 1e-12);
  }
  // Best split carries the highest proposed test PCC.
  ASSERT_TRUE(report.best_split.has_value());
  double best = -2.0;
  for (const auto& r : report.records) {
    if (r.model_id == sq::kProposedModelId && r.partition == "test") {
      best = std::max(best, r.metrics->pcc);
    }
  }
  for (const auto& r : report.records) {
    if (r.model_id == sq::kProposedModelId && r.partition == "test" &&
        r.split_id == *report.best_split) {
      EXPECT_EQ(r.metrics->pcc, best);
      EXPECT_EQ(*r.coefficients, *report.best_coefficients);
    }
  }
}

TEST(Evaluate, DeterministicAndScheduleIndependent) {
  auto cfg = sq::FitConfig{};
  cfg.repeats = 1;
  cfg.seed = 11;
  const auto data = labeled_design(kPlanted, 0.1, 5);
  const auto a = sq::report_to_json(sq::evaluate_protocol(data, registry(), cfg)).dump();
  const auto b = sq::report_to_json(sq::evaluate_protocol(data, registry(), cfg)).dump();
  EXPECT_EQ(a, b);

  cfg.repeats = 6;
  const auto serial = sq::report_to_json(sq::evaluate_protocol(data, registry(), cfg));
  cfg.parallel = true;
  auto parallel = sq::report_to_json(sq::evaluate_protocol(data, registry(), cfg));
  parallel["config"].erase("parallel");
  auto serial_cmp = serial;
  serial_cmp["config"].erase("parallel");
  EXPECT_EQ(serial_cmp.dump(), parallel.dump());
}

TEST(Evaluate, TrainingSetAlignmentMode) {
  auto cfg = sq::FitConfig{};
  cfg.alignment = sq::AlignmentMode::kTrainingSet;
  const auto report = sq::evaluate_protocol(labeled_design(kPlanted, 0.1, 5), registry(), cfg);
  const auto* tran = report.aggregate("tran");
  ASSERT_NE(tran, nullptr);
  EXPECT_EQ(tran->repeats_ok, 10);
}

TEST(Evaluate, FailedRepeatsAreRecorded) {
  // Mostly delay-free data: some training splits cannot identify the model.
  std::vector<sq::LabeledSession> data;
  const auto full = labeled_design(kPlanted, 0.05, 1);
  std::set<std::string> keep = {"tau2_D0_P0", "tau4_D0_P0", "tau8_D0_P0", "tau16_D0_P0",
                                "tau2_D4_P1", "tau4_D8_P3", "tau8_D16_P7"};
  for (const auto& item : full) {
    if (keep.count(item.id)) data.push_back(item);
  }
  auto cfg = sq::FitConfig{};
  cfg.train_fraction = 0.6;
  cfg.repeats = 10;
  const auto report = sq::evaluate_protocol(data, registry(), cfg);
  int failed = 0, ok = 0;
  for (const auto& r : report.records) {
    if (r.model_id != sq::kProposedModelId || r.partition != "test") continue;
    if (r.status == sq::RecordStatus::kFailed) {
      ++failed;
      EXPECT_FALSE(r.message.empty());
      EXPECT_FALSE(r.metrics.has_value());
    } else {
      ++ok;
    }
  }
  EXPECT_EQ(failed + ok, 10);
  EXPECT_GT(failed, 0);
  EXPECT_EQ(report.aggregate(sq::kProposedModelId)->repeats_ok, ok);
}
