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

// Swipe-delay QoE model with exponential recency weighting:
//
//   QoE = alpha + beta * sum_{i=1}^{N-1} d_i * exp(lambda * t_i / T)
//               + gamma * N^d
//
// t_i is the media time viewed through video i, T the total media time and
// N^d the number of nonzero delays. With beta < 0 and lambda > 0, later
// delays cost more than earlier ones.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swipeqoe/core.hpp"
#include "swipeqoe/text_io.hpp"

namespace swipeqoe {

struct ModelCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;

  friend bool operator==(const ModelCoefficients&,
                         const ModelCoefficients&) = default;
};

// Published fit of the model to the swipe-delay subjective dataset.
inline constexpr ModelCoefficients kPublishedCoefficients{4.52, -0.10, 0.55,
                                                          -0.23};

// The recency weight exp(lambda * t_i / T); t_i / T is formed exactly so
// that uniformly rescaling viewing durations leaves it unchanged.
inline double recency_weight(const Seconds& position, const Seconds& total,
                             double lambda) {
  return std::exp(lambda * to_double(position / total));
}

// sum_{i<N} d_i * exp(lambda * t_i / T): the only lambda-dependent term.
inline double weighted_delay(const Session& session, double lambda) {
  const auto positions = session.positions();
  const Seconds total = session.total_media_duration();
  if (total <= Seconds(0)) fail(ErrorCode::kInvalidArgument, "total media duration is zero");
  const auto& delays = session.delays();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < session.size(); ++i) {
    if (delays[i] == Seconds(0)) continue;
    sum += to_double(delays[i]) * recency_weight(positions[i], total, lambda);
  }
  return sum;
}

inline double predict_proposed(const Session& session,
                               const ModelCoefficients& c) {
  if (!std::isfinite(c.lambda)) {
    fail(ErrorCode::kInvalidArgument, "lambda must be finite");
  }
  return c.alpha + c.beta * weighted_delay(session, c.lambda) +
         c.gamma * static_cast<double>(session.delay_count());
}

// Reporting helper only; predictions are never clamped before alignment.
inline double clamp_to_scale(double score) { return std::clamp(score, 1.0, 5.0); }

struct Prediction {
  std::string stimulus_id;
  std::string model_id;
  double raw_score = 0.0;
  std::optional<double> aligned_score;
};

struct AlignmentFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> aligned;

  double apply(double raw) const { return slope * raw + intercept; }
};

// First-order least-squares mapping of raw model scores onto MOS.
inline AlignmentFit align(std::span<const double> raw, std::span<const double> mos) {
  require(raw.size() == mos.size(), "align: length mismatch");
  require(raw.size() >= 2, "align: need at least two points");
  const double n = static_cast<double>(raw.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    mx += raw[i];
    my += mos[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    sxx += (raw[i] - mx) * (raw[i] - mx);
    sxy += (raw[i] - mx) * (mos[i] - my);
  }
  if (sxx == 0.0) {
    fail(ErrorCode::kNonAlignable, "align: predictions have zero variance");
  }
  AlignmentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.aligned.reserve(raw.size());
  for (double r : raw) fit.aligned.push_back(fit.apply(r));
  return fit;
}

inline io::Json coefficients_to_json(const ModelCoefficients& c) {
  io::Json j;
  j["format"] = "swipeqoe-coefficients";
  j["version"] = 1;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["lambda"] = c.lambda;
  j["gamma"] = c.gamma;
  return j;
}

inline ModelCoefficients coefficients_from_json(const io::Json& j,
                                                std::string_view source) {
  return io::with_schema_errors(source, [&] {
    ModelCoefficients c{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                        j.at("lambda").get<double>(), j.at("gamma").get<double>()};
    if (!std::isfinite(c.lambda)) {
      fail(ErrorCode::kParse, std::string(source) + ": lambda must be finite");
    }
    return c;
  });
}

}  // namespace swipeqoe
