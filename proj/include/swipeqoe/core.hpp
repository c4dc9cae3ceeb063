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

// Session timing types and the fixed 132-stimulus swipe-delay design.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "swipeqoe/error.hpp"

namespace swipeqoe {

// Durations are exact rationals of seconds so that shares such as D/3 sum
// back to D without rounding. Conversion to milliseconds happens only at
// serialization and playback boundaries.
using Seconds = boost::rational<std::int64_t>;

inline double to_double(const Seconds& s) {
  return static_cast<double>(s.numerator()) /
         static_cast<double>(s.denominator());
}

// Nearest millisecond, halves rounded away from zero.
inline std::int64_t to_ms(const Seconds& s) {
  const Seconds scaled = s * std::int64_t{1000};
  const std::int64_t num = scaled.numerator();
  const std::int64_t den = scaled.denominator();
  if (num >= 0) return (2 * num + den) / (2 * den);
  return -((-2 * num + den) / (2 * den));
}

inline Seconds from_ms(std::int64_t ms) { return Seconds(ms, 1000); }

inline std::string to_string(const Seconds& s) {
  if (s.denominator() == 1) return std::to_string(s.numerator());
  return std::to_string(s.numerator()) + "/" + std::to_string(s.denominator());
}

struct Resolution {
  int width = 0;
  int height = 0;
};

struct Video {
  std::string id;
  double duration_s = 0.0;
  Resolution resolution;
  double bitrate_kbps = 0.0;
  double frame_rate = 0.0;
  std::string content_type;

  void validate() const {
    require(!id.empty(), "video id must not be empty");
    require(duration_s > 0.0, "video " + id + ": duration must be > 0");
    require(bitrate_kbps > 0.0, "video " + id + ": bitrate must be > 0");
    require(frame_rate > 0.0, "video " + id + ": frame rate must be > 0");
  }
};

// Metadata of the six clips used by the stimulus design. Only timing and
// bitrate matter to the toolkit; no media files are required.
inline std::vector<Video> default_videos() {
  return {
      {"video1", 60, {720, 1080}, 1154, 30, "Food"},
      {"video2", 35, {720, 1080}, 1912, 30, "Music"},
      {"video3", 29, {720, 1080}, 1086, 30, "Baby"},
      {"video4", 59, {720, 1080}, 934, 30, "Makeup"},
      {"video5", 26, {720, 1080}, 1802, 30, "School"},
      {"video6", 23, {720, 1080}, 773, 30, "Driving"},
  };
}

// An ordered run of videos with per-video viewing durations (tau_i) and the
// swipe delay incurred after each video (d_i). The delay after the final
// video is always zero.
class Session {
 public:
  Session(std::vector<std::string> video_ids,
          std::vector<Seconds> viewing_durations, std::vector<Seconds> delays)
      : video_ids_(std::move(video_ids)),
        viewing_durations_(std::move(viewing_durations)),
        delays_(std::move(delays)) {
    const std::size_t n = video_ids_.size();
    require(n >= 1, "session needs at least one video");
    require(viewing_durations_.size() == n && delays_.size() == n,
            "session lists must have equal length");
    for (std::size_t i = 0; i < n; ++i) {
      require(viewing_durations_[i] >= Seconds(0), "viewing durations must be >= 0");
      require(delays_[i] >= Seconds(0), "delays must be >= 0");
    }
    require(delays_.back() == Seconds(0), "delay after the last video must be zero");
    require(total_media_duration() > Seconds(0), "total media duration must be > 0");
  }

  std::size_t size() const { return video_ids_.size(); }
  const std::vector<std::string>& video_ids() const { return video_ids_; }
  const std::vector<Seconds>& viewing_durations() const {
    return viewing_durations_;
  }
  const std::vector<Seconds>& delays() const { return delays_; }

  // T
  Seconds total_media_duration() const {
    Seconds total = 0;
    for (const auto& tau : viewing_durations_) total += tau;
    return total;
  }

  // t_i: media time viewed up to and including video i.
  std::vector<Seconds> positions() const {
    std::vector<Seconds> out;
    out.reserve(size());
    Seconds acc = 0;
    for (const auto& tau : viewing_durations_) {
      acc += tau;
      out.push_back(acc);
    }
    return out;
  }

  // D
  Seconds total_delay() const {
    Seconds total = 0;
    for (const auto& d : delays_) total += d;
    return total;
  }

  // N^d
  std::size_t delay_count() const {
    std::size_t count = 0;
    for (const auto& d : delays_) count += d > Seconds(0) ? 1 : 0;
    return count;
  }

  Seconds wall_duration() const {
    return total_media_duration() + total_delay();
  }

  friend bool operator==(const Session&, const Session&) = default;

 private:
  std::vector<std::string> video_ids_;
  std::vector<Seconds> viewing_durations_;
  std::vector<Seconds> delays_;
};

enum class Pattern { P0, P1, P2, P3, P4, P5, P6, P7, P8 };

inline constexpr std::array<Pattern, 8> kDelayPatterns = {
    Pattern::P1, Pattern::P2, Pattern::P3, Pattern::P4,
    Pattern::P5, Pattern::P6, Pattern::P7, Pattern::P8};

inline std::string_view to_string(Pattern p) {
  static constexpr std::array<std::string_view, 9> kNames = {
      "P0", "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8"};
  return kNames[static_cast<std::size_t>(p)];
}

inline std::optional<Pattern> parse_pattern(std::string_view name) {
  for (int i = 0; i <= 8; ++i) {
    const auto p = static_cast<Pattern>(i);
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

// Zero-based indices of the videos followed by a delay. Odd patterns put
// the delays early in the session, even patterns late.
inline std::vector<std::size_t> delay_positions(Pattern p) {
  switch (p) {
    case Pattern::P0: return {};
    case Pattern::P1: return {0};
    case Pattern::P2: return {4};
    case Pattern::P3: return {0, 1};
    case Pattern::P4: return {3, 4};
    case Pattern::P5: return {0, 1, 2};
    case Pattern::P6: return {2, 3, 4};
    case Pattern::P7: return {0, 1, 2, 3};
    case Pattern::P8: return {1, 2, 3, 4};
  }
  return {};
}

inline std::size_t delay_count(Pattern p) { return delay_positions(p).size(); }

namespace design {

inline constexpr std::size_t kVideoCount = 6;
inline constexpr std::array<std::int64_t, 4> kViewingDurations = {2, 4, 8, 16};
inline constexpr std::array<std::int64_t, 5> kTotalDelays = {0, 1, 4, 8, 16};
inline constexpr std::int64_t kLastViewingDuration = 1;

}  // namespace design

struct StimulusSpec {
  std::string id;
  Seconds tau;
  Seconds total_delay;
  Pattern pattern = Pattern::P0;
  Session session;

  Seconds wall_duration() const { return session.wall_duration(); }
};

inline std::string stimulus_id(const Seconds& tau, const Seconds& total_delay,
                               Pattern pattern) {
  return "tau" + to_string(tau) + "_D" + to_string(total_delay) + "_" +
         std::string(to_string(pattern));
}

// One stimulus: five videos viewed for tau seconds each, a final video
// viewed for one second, and total_delay split equally over the pattern's
// positions.
inline StimulusSpec build_session(const Seconds& tau, const Seconds& total_delay,
                                  Pattern pattern) {
  require(tau > Seconds(0), "tau must be > 0");
  require(total_delay >= Seconds(0), "total delay must be >= 0");
  if (total_delay == Seconds(0)) {
    require(pattern == Pattern::P0, "zero total delay requires pattern P0");
  } else {
    require(pattern != Pattern::P0, "pattern P0 requires zero total delay");
  }

  std::vector<std::string> ids;
  std::vector<Seconds> viewing(design::kVideoCount, tau);
  std::vector<Seconds> delays(design::kVideoCount, Seconds(0));
  viewing.back() = Seconds(design::kLastViewingDuration);
  for (const auto& video : default_videos()) ids.push_back(video.id);

  const auto positions = delay_positions(pattern);
  if (!positions.empty()) {
    const Seconds share =
        total_delay / static_cast<std::int64_t>(positions.size());
    for (std::size_t pos : positions) delays[pos] = share;
  }
  Session session(std::move(ids), std::move(viewing), std::move(delays));
  return StimulusSpec{stimulus_id(tau, total_delay, pattern), tau, total_delay,
                      pattern, std::move(session)};
}

// All 132 stimuli ordered by (tau, D, pattern): per tau one no-delay
// stimulus plus eight patterns for each nonzero total delay.
inline std::vector<StimulusSpec> generate_design() {
  std::vector<StimulusSpec> out;
  out.reserve(132);
  for (std::int64_t tau : design::kViewingDurations) {
    for (std::int64_t total : design::kTotalDelays) {
      if (total == 0) {
        out.push_back(build_session(tau, 0, Pattern::P0));
        continue;
      }
      for (Pattern p : kDelayPatterns) out.push_back(build_session(tau, total, p));
    }
  }
  return out;
}

}  // namespace swipeqoe
