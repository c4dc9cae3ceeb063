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

// Subjective-rating pipeline: ACR rating tables, Pearson rater screening,
// per-stimulus MOS with Student-t confidence intervals, and the SOS
// hypothesis fit SOS^2 = a (MOS - 1)(5 - MOS).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "swipeqoe/error.hpp"
#include "swipeqoe/metrics.hpp"
#include "swipeqoe/text_io.hpp"

namespace swipeqoe {

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;
inline constexpr double kDefaultScreeningThreshold = 0.75;

struct Rating {
  std::string rater_id;
  std::string stimulus_id;
  int score = 0;
  std::string timestamp;

  friend bool operator==(const Rating&, const Rating&) = default;
};

namespace detail {

inline bool is_plain_token(std::string_view s) {
  return !s.empty() && s.find_first_of(",\n\r") == std::string_view::npos;
}

}  // namespace detail

// Raw ACR scores; at most one entry per (rater, stimulus).
class RatingTable {
 public:
  void add(Rating r) {
    require(detail::is_plain_token(r.rater_id), "rater id must be a non-empty token");
    require(detail::is_plain_token(r.stimulus_id),
            "stimulus id must be a non-empty token");
    require(r.timestamp.find_first_of(",\n\r") == std::string::npos,
            "timestamp must not contain delimiters");
    require(r.score >= kMinScore && r.score <= kMaxScore,
            "score must be in 1..5, got " + std::to_string(r.score));
    const bool inserted = keys_.emplace(r.rater_id, r.stimulus_id).second;
    require(inserted, "duplicate rating for (" + r.rater_id + ", " +
                          r.stimulus_id + ")");
    entries_.push_back(std::move(r));
  }

  bool contains(const std::string& rater, const std::string& stimulus) const {
    return keys_.count({rater, stimulus}) > 0;
  }

  const std::vector<Rating>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<std::string> raters() const {
    std::set<std::string> ids;
    for (const auto& e : entries_) ids.insert(e.rater_id);
    return {ids.begin(), ids.end()};
  }

  std::vector<std::string> stimuli() const {
    std::set<std::string> ids;
    for (const auto& e : entries_) ids.insert(e.stimulus_id);
    return {ids.begin(), ids.end()};
  }

  RatingTable restricted_to(const std::set<std::string>& raters) const {
    RatingTable out;
    for (const auto& e : entries_) {
      if (raters.count(e.rater_id)) out.add(e);
    }
    return out;
  }

 private:
  std::vector<Rating> entries_;
  std::set<std::pair<std::string, std::string>> keys_;
};

inline constexpr int kRatingsFormatVersion = 1;
inline constexpr std::string_view kRatingsColumns =
    "rater_id,stimulus_id,score,timestamp";

inline std::string format_rating_line(const Rating& r) {
  return r.rater_id + "," + r.stimulus_id + "," + std::to_string(r.score) + "," +
         r.timestamp;
}

inline std::string ratings_header() {
  return io::version_line("ratings", kRatingsFormatVersion) + "\n" +
         std::string(kRatingsColumns) + "\n";
}

inline std::string serialize_ratings(const RatingTable& table) {
  std::string out = ratings_header();
  for (const auto& r : table.entries()) out += format_rating_line(r) + "\n";
  return out;
}

namespace detail {

inline void expect_header(const std::vector<std::string_view>& lines,
                          std::string_view kind, int version,
                          std::string_view columns, std::string_view source) {
  const std::string expected = io::version_line(kind, version);
  if (lines.empty() || lines[0] != expected) {
    io::parse_fail(source, 1, 1, "expected '" + expected + "'");
  }
  if (lines.size() < 2 || lines[1] != columns) {
    io::parse_fail(source, 2, 1, "expected column header '" + std::string(columns) + "'");
  }
}

}  // namespace detail

inline RatingTable parse_ratings(std::string_view text, std::string_view source) {
  const auto lines = io::split_lines(text);
  detail::expect_header(lines, "ratings", kRatingsFormatVersion, kRatingsColumns,
                        source);
  RatingTable table;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto fields = io::split_fields(lines[i]);
    if (fields.size() != 4) {
      io::parse_fail(source, line_no, 1,
                     "expected 4 fields, got " + std::to_string(fields.size()));
    }
    Rating r;
    r.rater_id = std::string(fields[0].text);
    r.stimulus_id = std::string(fields[1].text);
    const auto score = io::parse_int(fields[2], source, line_no);
    r.timestamp = std::string(fields[3].text);
    if (r.rater_id.empty()) io::parse_fail(source, line_no, fields[0].column, "empty rater id");
    if (r.stimulus_id.empty()) {
      io::parse_fail(source, line_no, fields[1].column, "empty stimulus id");
    }
    if (score < kMinScore || score > kMaxScore) {
      io::parse_fail(source, line_no, fields[2].column,
                     "score out of range 1..5: " + std::to_string(score));
    }
    r.score = static_cast<int>(score);
    if (table.contains(r.rater_id, r.stimulus_id)) {
      io::parse_fail(source, line_no, 1,
                     "duplicate rating for (" + r.rater_id + ", " + r.stimulus_id + ")");
    }
    table.add(std::move(r));
  }
  return table;
}

inline RatingTable load_ratings(const std::string& path) {
  return parse_ratings(io::read_file(path), path);
}

// ---------------------------------------------------------------------------
// Screening

enum class RemovalReason { kLowCorrelation, kZeroVariance };

inline std::string_view to_string(RemovalReason r) {
  return r == RemovalReason::kLowCorrelation ? "low_correlation" : "zero_variance";
}

struct RemovedRater {
  std::string rater_id;
  RemovalReason reason = RemovalReason::kLowCorrelation;
  std::optional<double> correlation;
  int round = 0;
};

struct ScreeningResult {
  std::vector<std::string> kept;
  std::vector<RemovedRater> removed;
  // Correlation of each kept rater against the final reference MOS; absent
  // when the reference has no variance over the rater's stimuli.
  std::map<std::string, std::optional<double>> kept_correlation;
  int rounds = 0;
};

inline constexpr int kMaxScreeningRounds = 10;

// Iterative Pearson screening. Each round correlates every remaining rater's
// scores with the MOS of all remaining raters (the rater under test
// included) on the stimuli that rater scored, drops raters below the
// threshold or with constant scores, and repeats until nobody is dropped or
// the round limit is reached.
inline ScreeningResult screen_raters(const RatingTable& table,
                                     double threshold = kDefaultScreeningThreshold) {
  std::map<std::string, std::vector<const Rating*>> by_rater;
  for (const auto& e : table.entries()) by_rater[e.rater_id].push_back(&e);
  for (const auto& [id, list] : by_rater) {
    require(list.size() >= 3,
            "rater " + id + " scored fewer than 3 stimuli; screening needs 3");
  }

  std::set<std::string> current;
  for (const auto& [id, list] : by_rater) current.insert(id);

  ScreeningResult result;
  for (int round = 1; round <= kMaxScreeningRounds; ++round) {
    result.rounds = round;
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> sums;
    for (const auto& id : current) {
      for (const Rating* r : by_rater[id]) {
        auto& s = sums[r->stimulus_id];
        s.first += r->score;
        s.second += 1;
      }
    }
    std::vector<RemovedRater> dropped;
    result.kept_correlation.clear();
    for (const auto& id : current) {
      std::vector<double> own, reference;
      for (const Rating* r : by_rater[id]) {
        const auto& s = sums[r->stimulus_id];
        own.push_back(r->score);
        reference.push_back(static_cast<double>(s.first) / static_cast<double>(s.second));
      }
      const bool constant =
          std::all_of(own.begin(), own.end(), [&](double v) { return v == own.front(); });
      if (constant) {
        dropped.push_back({id, RemovalReason::kZeroVariance, std::nullopt, round});
        continue;
      }
      try {
        const double r = metrics::pcc(own, reference);
        if (r < threshold) {
          dropped.push_back({id, RemovalReason::kLowCorrelation, r, round});
        } else {
          result.kept_correlation[id] = r;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUndefinedCorrelation) throw;
        result.kept_correlation[id] = std::nullopt;
      }
    }
    for (const auto& d : dropped) current.erase(d.rater_id);
    result.removed.insert(result.removed.end(), dropped.begin(), dropped.end());
    if (dropped.empty()) break;
  }
  result.kept.assign(current.begin(), current.end());
  return result;
}

// ---------------------------------------------------------------------------
// MOS

struct MosRecord {
  std::string stimulus_id;
  double mos = 0.0;
  std::size_t n = 0;
  // Absent when n < 2.
  std::optional<double> ci_halfwidth;
  double sos = 0.0;

  bool flagged() const { return !ci_halfwidth.has_value(); }
};

// Two-sided 95% Student-t quantile t_{0.975, dof}.
inline double t_quantile_975(std::size_t dof) {
  require(dof >= 1, "t quantile needs at least one degree of freedom");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

// Per-stimulus mean, sample standard deviation and 95% CI half-width,
// ordered by stimulus id. Integer accumulation keeps the result independent
// of rater order.
inline std::vector<MosRecord> compute_mos(const RatingTable& table) {
  struct Acc {
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;
    std::int64_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& e : table.entries()) {
    auto& a = acc[e.stimulus_id];
    a.sum += e.score;
    a.sum_sq += e.score * e.score;
    a.n += 1;
  }
  std::vector<MosRecord> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    MosRecord rec;
    rec.stimulus_id = id;
    rec.n = static_cast<std::size_t>(a.n);
    rec.mos = static_cast<double>(a.sum) / static_cast<double>(a.n);
    if (a.n >= 2) {
      const std::int64_t num = a.n * a.sum_sq - a.sum * a.sum;
      const double var = static_cast<double>(num) / static_cast<double>(a.n * (a.n - 1));
      rec.sos = std::sqrt(var);
      rec.ci_halfwidth = t_quantile_975(rec.n - 1) * rec.sos /
                         std::sqrt(static_cast<double>(a.n));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline double mean_ci_halfwidth(const std::vector<MosRecord>& records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.ci_halfwidth) {
      sum += *r.ci_halfwidth;
      ++n;
    }
  }
  require(n > 0, "no record has a defined confidence interval");
  return sum / static_cast<double>(n);
}

inline constexpr int kMosFormatVersion = 1;
inline constexpr std::string_view kMosColumns = "stimulus_id,mos,n,ci_halfwidth,sos";

inline std::string serialize_mos(const std::vector<MosRecord>& records) {
  std::string out = io::version_line("mos", kMosFormatVersion) + "\n" +
                    std::string(kMosColumns) + "\n";
  for (const auto& r : records) {
    out += r.stimulus_id + "," + io::format_double(r.mos) + "," + std::to_string(r.n) +
           "," + (r.ci_halfwidth ? io::format_double(*r.ci_halfwidth) : "") + "," +
           io::format_double(r.sos) + "\n";
  }
  return out;
}

inline std::vector<MosRecord> parse_mos(std::string_view text, std::string_view source) {
  const auto lines = io::split_lines(text);
  detail::expect_header(lines, "mos", kMosFormatVersion, kMosColumns, source);
  std::vector<MosRecord> out;
  std::set<std::string> seen;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto f = io::split_fields(lines[i]);
    if (f.size() != 5) {
      io::parse_fail(source, line_no, 1, "expected 5 fields, got " + std::to_string(f.size()));
    }
    MosRecord r;
    r.stimulus_id = std::string(f[0].text);
    if (!seen.insert(r.stimulus_id).second) {
      io::parse_fail(source, line_no, 1, "duplicate stimulus " + r.stimulus_id);
    }
    r.mos = io::parse_double(f[1], source, line_no);
    if (r.mos < kMinScore || r.mos > kMaxScore) {
      io::parse_fail(source, line_no, f[1].column, "MOS outside 1..5");
    }
    const auto n = io::parse_int(f[2], source, line_no);
    if (n < 1) io::parse_fail(source, line_no, f[2].column, "n must be >= 1");
    r.n = static_cast<std::size_t>(n);
    if (!f[3].text.empty()) r.ci_halfwidth = io::parse_double(f[3], source, line_no);
    r.sos = io::parse_double(f[4], source, line_no);
    if (r.sos < 0) io::parse_fail(source, line_no, f[4].column, "SOS must be >= 0");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<MosRecord> load_mos(const std::string& path) {
  return parse_mos(io::read_file(path), path);
}

// ---------------------------------------------------------------------------
// SOS hypothesis

struct SosFit {
  double a = 0.0;
  std::size_t records_used = 0;
};

// Through-origin least squares of SOS^2 on x = (MOS - 1)(5 - MOS). Records at
// the scale ends (x = 0) and records without a defined spread (n < 2) carry
// no information and are skipped.
inline SosFit fit_sos(const std::vector<MosRecord>& records) {
  double sxy = 0.0, sxx = 0.0;
  std::size_t used = 0;
  for (const auto& r : records) {
    if (r.flagged()) continue;
    const double x = (r.mos - kMinScore) * (kMaxScore - r.mos);
    if (x <= 0.0) continue;
    sxy += r.sos * r.sos * x;
    sxx += x * x;
    ++used;
  }
  if (used == 0) {
    fail(ErrorCode::kUnidentifiable,
         "SOS fit needs at least one record strictly inside the scale");
  }
  return {sxy / sxx, used};
}

}  // namespace swipeqoe
