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

// Synthetic ACR raters.
//
// Conformant raters draw from the maximum-entropy distribution on {1..5}
// whose mean is the stimulus' true MOS and whose variance follows the SOS
// hypothesis, a (MOS - 1)(5 - MOS). Every (seed, rater, stimulus) triple
// owns its own random stream, so generation order never changes a score.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swipeqoe/analysis.hpp"
#include "swipeqoe/error.hpp"

namespace swipeqoe {

enum class Reliability { kConformant, kRandom, kConstant };

inline std::string_view to_string(Reliability r) {
  switch (r) {
    case Reliability::kConformant: return "conformant";
    case Reliability::kRandom: return "random";
    case Reliability::kConstant: return "constant";
  }
  return "conformant";
}

struct RaterProfile {
  std::string rater_id;
  Reliability reliability = Reliability::kConformant;
  std::uint64_t seed = 0;
  int constant_score = 3;
};

// Probabilities of scores 1..5.
struct ScoreDistribution {
  std::array<double, 5> p{};
  // Requested variance lay outside the feasible range for the mean and was
  // moved to the nearest bound.
  bool clamped = false;

  double mean() const {
    double m = 0.0;
    for (int k = 0; k < 5; ++k) m += p[k] * (k + 1);
    return m;
  }
  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (int k = 0; k < 5; ++k) v += p[k] * (k + 1 - m) * (k + 1 - m);
    return v;
  }
};

// Feasible variance range of a distribution on {1..5} with the given mean:
// the minimum puts all mass on the two neighbouring integers, the maximum on
// the scale ends.
inline std::pair<double, double> variance_bounds(double mean) {
  const double frac = mean - std::floor(mean);
  return {frac * (1.0 - frac), (mean - 1.0) * (5.0 - mean)};
}

namespace detail {

inline ScoreDistribution min_variance_distribution(double mean) {
  ScoreDistribution d;
  const int lo = std::clamp(static_cast<int>(std::floor(mean)), 1, 5);
  const double frac = mean - lo;
  d.p[lo - 1] = 1.0 - frac;
  if (frac > 0.0) d.p[lo] = frac;
  return d;
}

inline ScoreDistribution max_variance_distribution(double mean) {
  ScoreDistribution d;
  d.p[0] = (5.0 - mean) / 4.0;
  d.p[4] = (mean - 1.0) / 4.0;
  return d;
}

}  // namespace detail

inline constexpr double kMomentTolerance = 1e-9;

// Maximum-entropy distribution p_k ~ exp(t1 u + t2 u^2), u = k - 3, matching
// the first two moments. Solved by damped Newton on the dual's gradient. Targets
// within 1e-9 of a feasibility bound take the limiting two-point
// distribution; infeasible targets are clamped there and flagged.
inline ScoreDistribution maxent_distribution(double mean, double variance) {
  require(mean >= 1.0 && mean <= 5.0, "mean must lie in [1, 5]");
  require(variance >= 0.0, "variance must be >= 0");
  const auto [vmin, vmax] = variance_bounds(mean);
  if (variance <= vmin + kMomentTolerance || vmax - vmin <= 2 * kMomentTolerance) {
    auto d = detail::min_variance_distribution(mean);
    d.clamped = variance < vmin;
    return d;
  }
  if (variance >= vmax - kMomentTolerance) {
    auto d = detail::max_variance_distribution(mean);
    d.clamped = variance > vmax;
    return d;
  }

  const double m1 = mean - 3.0;
  const double m2 = variance + m1 * m1;
  double t1 = 0.0, t2 = 0.0;

  struct Eval {
    double g1, g2, h11, h12, h22;
    std::array<double, 5> p;
  };
  auto evaluate = [&](double a, double b) {
    std::array<double, 5> logits{};
    double top = -INFINITY;
    for (int k = 0; k < 5; ++k) {
      const double u = k - 2.0;
      logits[k] = a * u + b * u * u;
      top = std::max(top, logits[k]);
    }
    double z = 0.0;
    Eval e{};
    for (int k = 0; k < 5; ++k) {
      e.p[k] = std::exp(logits[k] - top);
      z += e.p[k];
    }
    double eu = 0.0, eu2 = 0.0, eu3 = 0.0, eu4 = 0.0;
    for (int k = 0; k < 5; ++k) {
      e.p[k] /= z;
      const double u = k - 2.0;
      eu += e.p[k] * u;
      eu2 += e.p[k] * u * u;
      eu3 += e.p[k] * u * u * u;
      eu4 += e.p[k] * u * u * u * u;
    }
    e.g1 = eu - m1;
    e.g2 = eu2 - m2;
    e.h11 = eu2 - eu * eu;
    e.h12 = eu3 - eu * eu2;
    e.h22 = eu4 - eu2 * eu2;
    return e;
  };

  Eval cur = evaluate(t1, t2);
  for (int iter = 0; iter < 500; ++iter) {
    if (std::abs(cur.g1) < 1e-13 && std::abs(cur.g2) < 1e-13) break;
    const double det = cur.h11 * cur.h22 - cur.h12 * cur.h12;
    double s1 = -cur.g1, s2 = -cur.g2;
    if (det > 1e-300) {
      s1 = -(cur.h22 * cur.g1 - cur.h12 * cur.g2) / det;
      s2 = -(-cur.h12 * cur.g1 + cur.h11 * cur.g2) / det;
    }
    // Backtrack on the gradient norm: the dual value itself loses precision
    // to cancellation when the target sits close to the maximum variance.
    auto merit = [](const Eval& e) { return e.g1 * e.g1 + e.g2 * e.g2; };
    double step = 1.0;
    Eval next = evaluate(t1 + s1, t2 + s2);
    while (!(merit(next) < merit(cur)) && step > 1e-12) {
      step *= 0.5;
      next = evaluate(t1 + step * s1, t2 + step * s2);
    }
    if (!(merit(next) < merit(cur))) break;
    t1 += step * s1;
    t2 += step * s2;
    cur = next;
  }
  ScoreDistribution d;
  d.p = cur.p;
  return d;
}

// Variance implied by the SOS hypothesis.
inline double sos_variance(double mos, double a) {
  return a * (mos - 1.0) * (5.0 - mos);
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Independent random stream for one (seed, rater, stimulus) triple.
inline std::mt19937_64 rating_stream(std::uint64_t seed, std::string_view rater_id,
                                     std::string_view stimulus_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    const char byte = static_cast<char>((seed >> (8 * i)) & 0xff);
    h = detail::fnv1a(std::string_view(&byte, 1), h);
  }
  h = detail::fnv1a(rater_id, h);
  h = detail::fnv1a("\x1f", h);
  h = detail::fnv1a(stimulus_id, h);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

// Uniform double in [0, 1) built from the top 53 bits, identical across
// standard library implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int draw_score(const ScoreDistribution& d, double u) {
  double cumulative = 0.0;
  for (int k = 0; k < 4; ++k) {
    cumulative += d.p[k];
    if (u < cumulative) return k + 1;
  }
  return 5;
}

struct TrueMos {
  std::string stimulus_id;
  double mos = 0.0;
};

struct SimulatedRatings {
  RatingTable table;
  std::vector<std::string> warnings;
};

inline SimulatedRatings simulate_ratings(const std::vector<TrueMos>& truth, double a,
                                         const std::vector<RaterProfile>& profiles) {
  require(a >= 0.0 && a <= 1.0, "SOS parameter a must lie in [0, 1]");
  SimulatedRatings out;
  for (const auto& t : truth) {
    require(t.mos >= 1.0 && t.mos <= 5.0,
            "true MOS of " + t.stimulus_id + " outside [1, 5]");
    const ScoreDistribution dist = maxent_distribution(t.mos, sos_variance(t.mos, a));
    if (dist.clamped) {
      const auto [vmin, vmax] = variance_bounds(t.mos);
      out.warnings.push_back("stimulus " + t.stimulus_id + ": variance " +
                             std::to_string(sos_variance(t.mos, a)) +
                             " infeasible for mean " + std::to_string(t.mos) +
                             ", clamped to [" + std::to_string(vmin) + ", " +
                             std::to_string(vmax) + "]");
    }
    for (const auto& profile : profiles) {
      int score = profile.constant_score;
      if (profile.reliability != Reliability::kConstant) {
        auto rng = rating_stream(profile.seed, profile.rater_id, t.stimulus_id);
        const double u = unit_uniform(rng);
        score = profile.reliability == Reliability::kRandom
                    ? 1 + static_cast<int>(u * 5.0)
                    : draw_score(dist, u);
      }
      out.table.add({profile.rater_id, t.stimulus_id, score, "0"});
    }
  }
  return out;
}

// A panel of conformant raters followed by random ones, seeded from base.
inline std::vector<RaterProfile> make_panel(std::size_t conformant, std::size_t random,
                                            std::uint64_t base_seed,
                                            std::size_t constant = 0) {
  std::vector<RaterProfile> panel;
  auto add = [&](std::string prefix, Reliability rel, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      std::string number = std::to_string(i + 1);
      if (number.size() < 2) number.insert(0, "0");
      panel.push_back({prefix + number, rel, base_seed, 3});
    }
  };
  add("c", Reliability::kConformant, conformant);
  add("r", Reliability::kRandom, random);
  add("k", Reliability::kConstant, constant);
  return panel;
}

}  // namespace swipeqoe
