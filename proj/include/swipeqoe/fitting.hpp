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

// Coefficient estimation for the swipe-delay model and the repeated
// random-split evaluation protocol.
//
// For fixed lambda the model is linear in (alpha, beta, gamma) with features
// [1, sum d_i exp(lambda t_i / T), N^d], so the MSE-optimal linear part has a
// closed form. lambda itself is profiled over a grid and then refined by
// golden-section search within one grid step of the best grid point.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "swipeqoe/baselines.hpp"
#include "swipeqoe/core.hpp"
#include "swipeqoe/metrics.hpp"
#include "swipeqoe/models.hpp"
#include "swipeqoe/text_io.hpp"

namespace swipeqoe {

struct LabeledSession {
  std::string id;
  Session session;
  double mos = 0.0;
};

enum class AlignmentMode {
  // Regression fitted on the same test split it is scored on.
  kEvaluationSet,
  // Regression fitted on the training split and applied to the test split.
  kTrainingSet,
};

struct FitConfig {
  double lambda_min = -1.0;
  double lambda_max = 5.0;
  double lambda_step = 0.01;
  double refine_tolerance = 1e-6;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  int repeats = 10;
  AlignmentMode alignment = AlignmentMode::kEvaluationSet;
  bool parallel = false;

  void validate() const {
    require(std::isfinite(lambda_min) && std::isfinite(lambda_max) &&
                lambda_min < lambda_max,
            "lambda grid needs min < max");
    require(lambda_step > 0.0, "lambda grid step must be > 0");
    require(refine_tolerance > 0.0, "refine tolerance must be > 0");
    require(train_fraction > 0.0 && train_fraction < 1.0,
            "train fraction must lie in (0, 1)");
    require(repeats >= 1, "repeats must be >= 1");
  }
};

inline constexpr double kMaxConditionNumber = 1e12;

struct LinearFit {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double mse = 0.0;
  double condition_number = 0.0;
};

// Ordinary least squares for fixed lambda via the 3x3 normal equations.
inline LinearFit solve_linear_part(const std::vector<LabeledSession>& data,
                                   double lambda) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> rows;
  rows.reserve(data.size());
  for (const auto& item : data) {
    const Eigen::Vector3d x(1.0, weighted_delay(item.session, lambda),
                            static_cast<double>(item.session.delay_count()));
    normal.noalias() += x * x.transpose();
    rhs.noalias() += x * item.mos;
    rows.push_back(x);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal,
                                                           Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionNumber)) {
    fail(ErrorCode::kUnidentifiable,
         "fit is unidentifiable: feature matrix is rank deficient (condition "
         "number " + std::to_string(cond) + ")");
  }
  const Eigen::Vector3d theta = normal.llt().solve(rhs);
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = rows[i].dot(theta) - data[i].mos;
    sse += r * r;
  }
  return {theta[0], theta[1], theta[2], sse / static_cast<double>(data.size()), cond};
}

struct FitResult {
  ModelCoefficients coefficients;
  double mse = 0.0;
  double grid_lambda = 0.0;
  double grid_mse = 0.0;
  // MSE at every grid lambda that produced an identifiable fit.
  std::vector<std::pair<double, double>> grid;
};

namespace detail {

inline bool session_less(const Session& a, const Session& b) {
  return std::tie(a.viewing_durations(), a.delays(), a.video_ids()) <
         std::tie(b.viewing_durations(), b.delays(), b.video_ids());
}

// Canonical order so that the fit does not depend on input order, down to
// the last bit of floating-point summation.
inline std::vector<LabeledSession> canonical_order(std::vector<LabeledSession> data) {
  std::stable_sort(data.begin(), data.end(),
                   [](const LabeledSession& a, const LabeledSession& b) {
                     if (session_less(a.session, b.session)) return true;
                     if (session_less(b.session, a.session)) return false;
                     return a.mos < b.mos;
                   });
  return data;
}

}  // namespace detail

inline FitResult fit_proposed_detailed(const std::vector<LabeledSession>& input,
                                       const FitConfig& config = {}) {
  config.validate();
  const auto data = detail::canonical_order(input);
  std::size_t distinct = data.empty() ? 0 : 1;
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (!(data[i].session == data[i - 1].session)) ++distinct;
  }
  if (distinct < 4) {
    fail(ErrorCode::kUnidentifiable,
         "fit needs at least 4 distinct stimuli, got " + std::to_string(distinct));
  }

  FitResult result;
  const auto steps = static_cast<std::int64_t>(
      std::floor((config.lambda_max - config.lambda_min) / config.lambda_step + 1e-9));
  std::optional<LinearFit> best;
  std::optional<Error> last_error;
  for (std::int64_t j = 0; j <= steps; ++j) {
    const double lambda = config.lambda_min + static_cast<double>(j) * config.lambda_step;
    try {
      const LinearFit fit = solve_linear_part(data, lambda);
      result.grid.emplace_back(lambda, fit.mse);
      if (!best || fit.mse < best->mse) {
        best = fit;
        result.grid_lambda = lambda;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnidentifiable) throw;
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  result.grid_mse = best->mse;

  auto mse_at = [&](double lambda) {
    try {
      return solve_linear_part(data, lambda).mse;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnidentifiable) throw;
      return std::numeric_limits<double>::infinity();
    }
  };

  // Golden-section refinement in [grid - step, grid + step].
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = std::max(config.lambda_min, result.grid_lambda - config.lambda_step);
  double hi = std::min(config.lambda_max, result.grid_lambda + config.lambda_step);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = mse_at(x1);
  double f2 = mse_at(x2);
  while (hi - lo >= config.refine_tolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = mse_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = mse_at(x2);
    }
  }
  double lambda = 0.5 * (lo + hi);
  LinearFit refined{};
  try {
    refined = solve_linear_part(data, lambda);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUnidentifiable) throw;
    refined.mse = std::numeric_limits<double>::infinity();
  }
  if (!(refined.mse <= best->mse)) {
    lambda = result.grid_lambda;
    refined = *best;
  }
  result.coefficients = {refined.alpha, refined.beta, lambda, refined.gamma};
  result.mse = refined.mse;
  return result;
}

inline ModelCoefficients fit_proposed(const std::vector<LabeledSession>& data,
                                      const FitConfig& config = {}) {
  return fit_proposed_detailed(data, config).coefficients;
}

// ---------------------------------------------------------------------------
// Evaluation protocol

inline constexpr std::string_view kProposedModelId = "proposed";

enum class RecordStatus { kOk, kFailed, kUnavailable };

inline std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::kOk: return "ok";
    case RecordStatus::kFailed: return "failed";
    case RecordStatus::kUnavailable: return "unavailable";
  }
  return "ok";
}

struct EvaluationRecord {
  std::string model_id;
  std::string display_name;
  int split_id = 0;
  std::string partition;  // "train" or "test"
  RecordStatus status = RecordStatus::kOk;
  std::string message;
  std::optional<double> slope;
  std::optional<double> intercept;
  std::optional<metrics::MetricsReport> metrics;
  std::optional<ModelCoefficients> coefficients;
};

struct AggregateRecord {
  std::string model_id;
  std::string display_name;
  std::string partition;
  int repeats_ok = 0;
  std::optional<double> slope;
  std::optional<double> intercept;
  std::optional<metrics::MetricsReport> metrics;
};

struct EvaluationReport {
  FitConfig config;
  std::size_t dataset_size = 0;
  std::size_t train_size = 0;
  std::vector<EvaluationRecord> records;
  std::vector<AggregateRecord> aggregates;
  std::optional<int> best_split;
  std::optional<ModelCoefficients> best_coefficients;

  const AggregateRecord* aggregate(std::string_view model_id,
                                   std::string_view partition = "test") const {
    for (const auto& a : aggregates) {
      if (a.model_id == model_id && a.partition == partition) return &a;
    }
    return nullptr;
  }
};

// Uniform integer in [0, bound) by rejection; stable across platforms.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Seeded Fisher-Yates permutation of [0, n) for one split.
inline std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed,
                                                  int split_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split_id)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

inline std::size_t train_size_for(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(k, 1, n > 1 ? n - 1 : 1);
}

namespace detail {

inline std::vector<double> mos_of(const std::vector<LabeledSession>& items) {
  std::vector<double> out;
  for (const auto& i : items) out.push_back(i.mos);
  return out;
}

inline std::vector<double> baseline_scores(const BaselineRegistry& registry,
                                           const std::string& id,
                                           const std::vector<LabeledSession>& items) {
  std::vector<double> out;
  for (const auto& i : items) {
    out.push_back(registry.predict(id, BaselineInput::from_session(i.session)));
  }
  return out;
}

inline std::vector<EvaluationRecord> run_split(const std::vector<LabeledSession>& dataset,
                                               const BaselineRegistry& registry,
                                               const FitConfig& config, int split_id) {
  const auto perm = split_permutation(dataset.size(), config.seed, split_id);
  const std::size_t n_train = train_size_for(dataset.size(), config.train_fraction);
  std::vector<LabeledSession> train, test;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    (k < n_train ? train : test).push_back(dataset[perm[k]]);
  }
  const auto train_mos = mos_of(train);
  const auto test_mos = mos_of(test);

  std::vector<EvaluationRecord> out;
  auto record = [&](std::string id, std::string name, std::string partition) {
    EvaluationRecord r;
    r.model_id = std::move(id);
    r.display_name = std::move(name);
    r.split_id = split_id;
    r.partition = std::move(partition);
    return r;
  };

  // Proposed model: fitted on train, scored unaligned on both partitions.
  {
    auto tr = record(std::string(kProposedModelId), "Ours", "train");
    auto te = record(std::string(kProposedModelId), "Ours", "test");
    try {
      const ModelCoefficients c = fit_proposed(train, config);
      std::vector<double> p_train, p_test;
      for (const auto& i : train) p_train.push_back(predict_proposed(i.session, c));
      for (const auto& i : test) p_test.push_back(predict_proposed(i.session, c));
      tr.coefficients = te.coefficients = c;
      tr.metrics = metrics::evaluate(p_train, train_mos);
      te.metrics = metrics::evaluate(p_test, test_mos);
    } catch (const Error& e) {
      for (auto* r : {&tr, &te}) {
        r->status = RecordStatus::kFailed;
        r->message = std::string(to_string(e.code())) + ": " + e.what();
        r->metrics.reset();
      }
    }
    out.push_back(std::move(tr));
    out.push_back(std::move(te));
  }

  for (const auto& model : registry.models()) {
    auto te = record(model.model_id, model.display_name, "test");
    if (!registry.implemented(model.model_id)) {
      te.status = RecordStatus::kUnavailable;
      te.message = "no scorer configured";
      out.push_back(std::move(te));
      continue;
    }
    try {
      const auto raw_test = baseline_scores(registry, model.model_id, test);
      AlignmentFit fit;
      if (config.alignment == AlignmentMode::kEvaluationSet) {
        fit = align(raw_test, test_mos);
      } else {
        fit = align(baseline_scores(registry, model.model_id, train), train_mos);
        fit.aligned.clear();
        for (double r : raw_test) fit.aligned.push_back(fit.apply(r));
      }
      te.slope = fit.slope;
      te.intercept = fit.intercept;
      te.metrics = metrics::evaluate(fit.aligned, test_mos);
    } catch (const Error& e) {
      te.status = RecordStatus::kFailed;
      te.message = std::string(to_string(e.code())) + ": " + e.what();
      te.metrics.reset();
    }
    out.push_back(std::move(te));
  }
  return out;
}

}  // namespace detail

// Repeats the random train/test split, fits the proposed model on each
// training split, scores it and every baseline on the test split, and
// averages the metrics over the repeats that succeeded. Results are merged
// in split order, so the report does not depend on scheduling.
inline EvaluationReport evaluate_protocol(const std::vector<LabeledSession>& dataset,
                                          const BaselineRegistry& registry,
                                          const FitConfig& config) {
  config.validate();
  require(!dataset.empty(), "evaluation dataset is empty");

  std::vector<std::vector<EvaluationRecord>> per_split(config.repeats);
  if (config.parallel) {
    std::vector<std::future<std::vector<EvaluationRecord>>> jobs;
    for (int s = 0; s < config.repeats; ++s) {
      jobs.push_back(std::async(std::launch::async, [&, s] {
        return detail::run_split(dataset, registry, config, s);
      }));
    }
    for (int s = 0; s < config.repeats; ++s) per_split[s] = jobs[s].get();
  } else {
    for (int s = 0; s < config.repeats; ++s) {
      per_split[s] = detail::run_split(dataset, registry, config, s);
    }
  }

  EvaluationReport report;
  report.config = config;
  report.dataset_size = dataset.size();
  report.train_size = train_size_for(dataset.size(), config.train_fraction);
  for (auto& split : per_split) {
    for (auto& r : split) report.records.push_back(std::move(r));
  }

  // Aggregates in first-appearance order of (model, partition).
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const EvaluationRecord*>> groups;
  std::map<std::string, std::string> names;
  for (const auto& r : report.records) {
    const auto key = std::make_pair(r.model_id, r.partition);
    if (!groups.count(key)) keys.push_back(key);
    names[r.model_id] = r.display_name;
    groups[key];
    if (r.status == RecordStatus::kOk) groups[key].push_back(&r);
  }
  for (const auto& key : keys) {
    AggregateRecord agg;
    agg.model_id = key.first;
    agg.display_name = names[key.first];
    agg.partition = key.second;
    const auto& ok = groups[key];
    agg.repeats_ok = static_cast<int>(ok.size());
    if (!ok.empty()) {
      metrics::MetricsReport m;
      double slope = 0.0, intercept = 0.0;
      bool aligned = true;
      for (const auto* r : ok) {
        m.rmse += r->metrics->rmse;
        m.pcc += r->metrics->pcc;
        m.srocc += r->metrics->srocc;
        if (r->slope) {
          slope += *r->slope;
          intercept += *r->intercept;
        } else {
          aligned = false;
        }
      }
      const double n = static_cast<double>(ok.size());
      agg.metrics = metrics::MetricsReport{m.rmse / n, m.pcc / n, m.srocc / n};
      if (aligned) {
        agg.slope = slope / n;
        agg.intercept = intercept / n;
      }
    }
    report.aggregates.push_back(std::move(agg));
  }

  // Best split: highest proposed test PCC, then lowest RMSE, then lowest id.
  const EvaluationRecord* best = nullptr;
  for (const auto& r : report.records) {
    if (r.model_id != kProposedModelId || r.partition != "test" ||
        r.status != RecordStatus::kOk) {
      continue;
    }
    if (best == nullptr) {
      best = &r;
      continue;
    }
    const auto& a = *r.metrics;
    const auto& b = *best->metrics;
    if (a.pcc > b.pcc || (a.pcc == b.pcc && (a.rmse < b.rmse ||
                                             (a.rmse == b.rmse && r.split_id < best->split_id)))) {
      best = &r;
    }
  }
  if (best != nullptr) {
    report.best_split = best->split_id;
    report.best_coefficients = best->coefficients;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace detail {

inline io::Json optional_number(const std::optional<double>& v) {
  return v ? io::Json(*v) : io::Json(nullptr);
}

}  // namespace detail

inline io::Json report_to_json(const EvaluationReport& report) {
  io::Json doc;
  doc["format"] = "swipeqoe-evaluation";
  doc["version"] = 1;
  io::Json cfg;
  cfg["seed"] = report.config.seed;
  cfg["repeats"] = report.config.repeats;
  cfg["train_fraction"] = report.config.train_fraction;
  cfg["lambda_grid"] = {report.config.lambda_min, report.config.lambda_max,
                        report.config.lambda_step};
  cfg["refine_tolerance"] = report.config.refine_tolerance;
  cfg["alignment"] = report.config.alignment == AlignmentMode::kEvaluationSet
                         ? "evaluation_set"
                         : "training_set";
  cfg["dataset_size"] = report.dataset_size;
  cfg["train_size"] = report.train_size;
  doc["config"] = cfg;

  auto row = [](const std::string& model, const std::string& name,
                const std::optional<double>& slope,
                const std::optional<double>& intercept,
                const std::optional<metrics::MetricsReport>& m) {
    io::Json j;
    j["model"] = model;
    j["name"] = name;
    j["slope"] = detail::optional_number(slope);
    j["intercept"] = detail::optional_number(intercept);
    j["rmse"] = m ? io::Json(m->rmse) : io::Json(nullptr);
    j["pcc"] = m ? io::Json(m->pcc) : io::Json(nullptr);
    j["srocc"] = m ? io::Json(m->srocc) : io::Json(nullptr);
    return j;
  };

  io::Json rows = io::Json::array();
  for (const auto& r : report.records) {
    io::Json j = row(r.model_id, r.display_name, r.slope, r.intercept, r.metrics);
    j["split"] = r.split_id;
    j["partition"] = r.partition;
    j["status"] = std::string(to_string(r.status));
    if (!r.message.empty()) j["message"] = r.message;
    rows.push_back(j);
  }
  doc["splits"] = rows;

  io::Json agg = io::Json::array();
  for (const auto& a : report.aggregates) {
    io::Json j = row(a.model_id, a.display_name, a.slope, a.intercept, a.metrics);
    j["partition"] = a.partition;
    j["repeats_ok"] = a.repeats_ok;
    agg.push_back(j);
  }
  doc["aggregate"] = agg;

  if (report.best_coefficients) {
    io::Json c = coefficients_to_json(*report.best_coefficients);
    c["split"] = *report.best_split;
    doc["coefficients"] = c;
  } else {
    doc["coefficients"] = nullptr;
  }
  return doc;
}

// Human-readable comparison table of the aggregate rows.
inline std::string format_report_table(const EvaluationReport& report) {
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string("---");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return std::string(buf);
  };
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %-6s %8s %10s %8s %8s %8s\n", "Model", "Split",
                "Slope", "Intercept", "RMSE", "PCC", "SROCC");
  out += line;
  for (const auto& a : report.aggregates) {
    const bool has = a.metrics.has_value();
    std::snprintf(line, sizeof(line), "%-12s %-6s %8s %10s %8s %8s %8s\n",
                  a.display_name.c_str(), a.partition == "test" ? "Test" : "Train",
                  num(a.slope).c_str(), num(a.intercept).c_str(),
                  num(has ? std::optional<double>(a.metrics->rmse) : std::nullopt).c_str(),
                  num(has ? std::optional<double>(a.metrics->pcc) : std::nullopt).c_str(),
                  num(has ? std::optional<double>(a.metrics->srocc) : std::nullopt).c_str());
    out += line;
  }
  if (report.best_coefficients) {
    const auto& c = *report.best_coefficients;
    std::snprintf(line, sizeof(line),
                  "\nalpha %.4f  beta %.4f  lambda %.4f  gamma %.4f  (split %d)\n", c.alpha,
                  c.beta, c.lambda, c.gamma, *report.best_split);
    out += line;
  }
  return out;
}

}  // namespace swipeqoe
