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

// Discrete-event playback simulator for a swipe feed with a fixed-depth
// preload queue.
//
// Videos are downloaded whole, one at a time, in feed order, at the full
// instantaneous bandwidth of a piecewise-constant trace. While the user is
// on video f, videos up to f + queue_depth may be downloaded. A video plays
// as soon as the user has swiped to it and it is fully downloaded; the gap
// between the swipe and playback is the swipe delay. The user swipes as
// soon as the scripted viewing duration has elapsed, never swipes back and
// never abandons. Partial downloads are always resumed, never discarded.
//
// Time is kept in integer microseconds and data in microbits (1e-6 bit), so
// one microsecond at b bit/s moves exactly b microbits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swipeqoe/core.hpp"
#include "swipeqoe/models.hpp"
#include "swipeqoe/text_io.hpp"

namespace swipeqoe::netsim {

using Micros = std::int64_t;

inline constexpr std::int64_t kInfiniteRate = std::numeric_limits<std::int64_t>::max();

struct BandwidthSample {
  double time_s = 0.0;
  double bandwidth_kbps = 0.0;
};

class BandwidthTrace {
 public:
  struct Segment {
    Micros start = 0;
    std::int64_t rate_bps = 0;  // kInfiniteRate for an unlimited link
  };

  explicit BandwidthTrace(std::vector<BandwidthSample> samples)
      : samples_(std::move(samples)) {
    require(!samples_.empty(), "bandwidth trace is empty");
    require(samples_.front().time_s == 0.0, "bandwidth trace must start at time 0");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& s = samples_[i];
      require(!std::isnan(s.bandwidth_kbps) && s.bandwidth_kbps >= 0.0,
              "bandwidth must be >= 0");
      if (i > 0) {
        require(s.time_s > samples_[i - 1].time_s,
                "bandwidth trace times must be strictly increasing");
      }
      const Micros start = std::llround(s.time_s * 1e6);
      require(segments_.empty() || start > segments_.back().start,
              "bandwidth trace samples closer than 1 us");
      const std::int64_t rate = std::isinf(s.bandwidth_kbps)
                                    ? kInfiniteRate
                                    : std::llround(s.bandwidth_kbps * 1000.0);
      segments_.push_back({start, rate});
    }
  }

  static BandwidthTrace constant(double kbps) { return BandwidthTrace({{0.0, kbps}}); }

  const std::vector<BandwidthSample>& samples() const { return samples_; }
  const std::vector<Segment>& segments() const { return segments_; }

  // Time of the last sample; beyond it the last bandwidth is held.
  Micros nominal_end() const { return segments_.back().start; }

  std::size_t segment_at(Micros t) const {
    std::size_t i = 0;
    while (i + 1 < segments_.size() && segments_[i + 1].start <= t) ++i;
    return i;
  }

  Micros segment_end(std::size_t i) const {
    return i + 1 < segments_.size() ? segments_[i + 1].start
                                    : std::numeric_limits<Micros>::max();
  }

  // Microbits delivered over [from, to]; saturates for unlimited links.
  std::int64_t delivered(Micros from, Micros to) const {
    std::int64_t total = 0;
    for (std::size_t i = segment_at(from); from < to; ++i) {
      const Micros end = std::min(to, segment_end(i));
      const std::int64_t rate = segments_[i].rate_bps;
      if (rate == kInfiniteRate) return kInfiniteRate;
      total += rate * (end - from);
      from = end;
    }
    return total;
  }

  // Earliest time at which `work` microbits, starting at `from`, are done.
  // nullopt when the link stays at zero forever.
  std::optional<Micros> finish_time(std::int64_t work, Micros from) const {
    if (work <= 0) return from;
    for (std::size_t i = segment_at(from);; ++i) {
      const Micros end = segment_end(i);
      const std::int64_t rate = segments_[i].rate_bps;
      if (rate == kInfiniteRate) return from;
      if (rate > 0) {
        const Micros needed = (work + rate - 1) / rate;
        if (end == std::numeric_limits<Micros>::max() || needed <= end - from) {
          return from + needed;
        }
        work -= rate * (end - from);
      } else if (end == std::numeric_limits<Micros>::max()) {
        return std::nullopt;
      }
      from = end;
    }
  }

 private:
  std::vector<BandwidthSample> samples_;
  std::vector<Segment> segments_;
};

struct PreloadPolicy {
  std::size_t queue_depth = 1;
};

struct SwipeScript {
  std::vector<Seconds> viewing_durations;

  void validate() const {
    require(!viewing_durations.empty(), "swipe script is empty");
    for (const auto& d : viewing_durations) {
      require(d > Seconds(0), "viewing durations must be > 0");
    }
  }
};

struct SimulationOptions {
  // Simulated-time cap; reaching it with undelivered data is an error.
  Micros max_time_us = 3'600'000'000;
};

struct Event {
  Micros t_us = 0;
  std::string event;
  std::string video_id;
  std::string detail;
};

struct DownloadInterval {
  std::size_t video = 0;
  Micros start_us = 0;
  Micros finish_us = 0;
  std::int64_t size_microbits = 0;
};

struct SimulationResult {
  Session session;
  Micros startup_delay_us = 0;
  // Swipe delay after each video, in microseconds; the last is always 0.
  std::vector<Micros> delays_us;
  std::vector<Micros> playback_start_us;
  std::vector<Micros> swipe_us;
  std::vector<DownloadInterval> downloads;
  std::vector<Event> events;
};

inline std::int64_t video_size_microbits(const Video& v) {
  return std::llround(v.bitrate_kbps * v.duration_s * 1e9);
}

inline Micros to_micros(const Seconds& s) {
  const Seconds scaled = s * std::int64_t{1'000'000};
  return (2 * scaled.numerator() + scaled.denominator()) / (2 * scaled.denominator());
}

inline SimulationResult simulate_session(const std::vector<Video>& videos,
                                         const BandwidthTrace& trace,
                                         const PreloadPolicy& policy,
                                         const SwipeScript& script,
                                         const SimulationOptions& options = {}) {
  script.validate();
  require(!videos.empty(), "video queue is empty");
  require(videos.size() == script.viewing_durations.size(),
          "swipe script length must match the video queue");
  for (const auto& v : videos) v.validate();

  const std::size_t n = videos.size();
  std::vector<Micros> viewing(n);
  std::vector<std::int64_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    viewing[i] = to_micros(script.viewing_durations[i]);
    require(viewing[i] > 0, "viewing durations must be at least 1 us");
    sizes[i] = video_size_microbits(videos[i]);
  }

  SimulationResult out{Session({videos[0].id}, {Seconds(1)}, {Seconds(0)}),
                       0, std::vector<Micros>(n, 0), std::vector<Micros>(n, 0),
                       std::vector<Micros>(n, 0), {}, {}};
  auto log = [&](Micros t, std::string event, std::size_t video, std::string detail = {}) {
    out.events.push_back({t, std::move(event), video < n ? videos[video].id : "", std::move(detail)});
  };

  Micros now = 0;
  std::size_t focus = 0;  // video the user is on
  bool playing = false;
  Micros swipe_time = 0;  // when the user arrived at `focus`
  Micros play_end = 0;
  std::size_t next_download = 0;
  bool downloading = false;
  std::int64_t remaining = 0;
  Micros download_start = 0;
  bool extended_logged = false;
  std::vector<bool> ready(n, false);

  log(0, "swipe", 0, "session_start");
  while (true) {
    if (!downloading && next_download < n && next_download <= focus + policy.queue_depth) {
      downloading = true;
      remaining = sizes[next_download];
      download_start = now;
      log(now, "download_start", next_download);
    }
    if (!playing && ready[focus]) {
      const Micros delay = now - swipe_time;
      if (focus == 0) {
        out.startup_delay_us = delay;
      } else {
        out.delays_us[focus - 1] = delay;
      }
      if (delay > 0) log(now, "stall_end", focus, "duration_us=" + std::to_string(delay));
      log(now, "playback_start", focus);
      out.playback_start_us[focus] = now;
      playing = true;
      play_end = now + viewing[focus];
      continue;
    }

    std::optional<Micros> download_done;
    if (downloading) {
      download_done = trace.finish_time(remaining, now);
      if (!download_done) {
        fail(ErrorCode::kNonTerminating,
             "download of " + videos[next_download].id +
                 " never completes: bandwidth stays at zero");
      }
    }
    const Micros user_next = playing ? play_end : std::numeric_limits<Micros>::max();
    const Micros next = std::min(download_done.value_or(std::numeric_limits<Micros>::max()),
                                 user_next);
    if (next == std::numeric_limits<Micros>::max()) {
      fail(ErrorCode::kNonTerminating, "simulation stalled with no pending event");
    }
    if (next > options.max_time_us) {
      fail(ErrorCode::kNonTerminating,
           "simulation exceeded the time cap of " + std::to_string(options.max_time_us) + " us");
    }
    if (!extended_logged && next > trace.nominal_end()) {
      extended_logged = true;
      log(std::max(now, trace.nominal_end()), "trace_extended", n,
          "holding last bandwidth " +
              io::format_double(trace.samples().back().bandwidth_kbps) + " kbps");
    }
    if (downloading) {
      const std::int64_t got = trace.delivered(now, next);
      remaining = got == kInfiniteRate ? 0 : remaining - got;
    }
    now = next;

    if (download_done && *download_done <= user_next) {
      ready[next_download] = true;
      out.downloads.push_back({next_download, download_start, now, sizes[next_download]});
      log(now, "download_finish", next_download,
          "size_kb=" + io::format_double(videos[next_download].bitrate_kbps *
                                         videos[next_download].duration_s));
      downloading = false;
      ++next_download;
      continue;
    }

    // The scripted viewing time of the focused video has elapsed.
    playing = false;
    if (focus + 1 == n) {
      log(now, "session_end", focus);
      break;
    }
    log(now, "swipe", focus + 1);
    out.swipe_us[focus] = now;
    ++focus;
    swipe_time = now;
    if (!ready[focus]) log(now, "stall_start", focus);
  }
  out.swipe_us[n - 1] = now;

  std::vector<std::string> ids;
  std::vector<Seconds> durations, delays;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(videos[i].id);
    durations.emplace_back(viewing[i], 1'000'000);
    delays.emplace_back(out.delays_us[i], 1'000'000);
  }
  out.session = Session(std::move(ids), std::move(durations), std::move(delays));
  return out;
}

// Proposed-model score of a realized session.
inline double score_session(const Session& session, const ModelCoefficients& c) {
  return predict_proposed(session, c);
}

inline BandwidthTrace parse_trace(std::string_view text, std::string_view source) {
  std::vector<BandwidthSample> samples;
  const auto lines = io::split_lines(text);
  bool header_allowed = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    if (header_allowed && line == "time_s,bandwidth_kbps") {
      header_allowed = false;
      continue;
    }
    header_allowed = false;
    const auto f = io::split_fields(line);
    if (f.size() != 2) {
      io::parse_fail(source, line_no, 1, "expected time_s,bandwidth_kbps");
    }
    BandwidthSample s{io::parse_double(f[0], source, line_no),
                      io::parse_double(f[1], source, line_no)};
    if (s.bandwidth_kbps < 0) io::parse_fail(source, line_no, f[1].column, "negative bandwidth");
    if (samples.empty() && s.time_s != 0.0) {
      io::parse_fail(source, line_no, f[0].column, "trace must start at time 0");
    }
    if (!samples.empty() && s.time_s <= samples.back().time_s) {
      io::parse_fail(source, line_no, f[0].column, "times must be strictly increasing");
    }
    samples.push_back(s);
  }
  if (samples.empty()) io::parse_fail(source, 1, 1, "trace has no samples");
  try {
    return BandwidthTrace(std::move(samples));
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string(source) + ": " + e.what());
  }
}

inline std::string serialize_events(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    io::Json j;
    j["t_us"] = e.t_us;
    j["event"] = e.event;
    j["video_id"] = e.video_id;
    j["detail"] = e.detail;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace swipeqoe::netsim
