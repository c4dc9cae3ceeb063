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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "swipeqoe/error.hpp"

namespace swipeqoe::metrics {

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "metric inputs must have equal length");
  require(x.size() >= 2, "metric inputs need at least two samples");
}

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

inline double rmse(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(x.size()));
}

// Two-pass centered Pearson correlation. Throws kUndefinedCorrelation when
// either input has zero variance.
inline double pcc(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const double mx = detail::mean(x);
  const double my = detail::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    fail(ErrorCode::kUndefinedCorrelation, "correlation undefined: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Fractional (average) ranks, 1-based. Tied values share the mean of the
// ranks they span.
inline std::vector<double> fractional_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double srocc(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return pcc(rx, ry);
}

struct MetricsReport {
  double rmse = 0.0;
  double pcc = 0.0;
  double srocc = 0.0;
};

inline MetricsReport evaluate(std::span<const double> predicted,
                              std::span<const double> actual) {
  return {rmse(predicted, actual), pcc(predicted, actual),
          srocc(predicted, actual)};
}

}  // namespace swipeqoe::metrics
