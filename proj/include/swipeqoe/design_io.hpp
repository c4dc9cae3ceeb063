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

// JSON interchange for stimulus sets and individual sessions.
//
// A stimulus-set document carries the design constants and one record per
// stimulus with millisecond durations and delays. It is the contract shared
// by the CLI subcommands and the study service. Reading a stimulus record
// rebuilds the exact rational session from (tau_s, total_delay_s, pattern)
// and rejects records whose millisecond arrays disagree with it.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "swipeqoe/core.hpp"
#include "swipeqoe/text_io.hpp"

namespace swipeqoe {

inline constexpr int kStimulusFormatVersion = 1;
inline constexpr int kSessionFormatVersion = 1;

inline io::Json video_to_json(const Video& v) {
  io::Json j;
  j["id"] = v.id;
  j["duration_s"] = v.duration_s;
  j["width"] = v.resolution.width;
  j["height"] = v.resolution.height;
  j["bitrate_kbps"] = v.bitrate_kbps;
  j["frame_rate"] = v.frame_rate;
  j["content_type"] = v.content_type;
  return j;
}

inline Video video_from_json(const io::Json& j) {
  Video v;
  v.id = j.at("id").get<std::string>();
  v.duration_s = j.at("duration_s").get<double>();
  v.resolution.width = j.value("width", 0);
  v.resolution.height = j.value("height", 0);
  v.bitrate_kbps = j.at("bitrate_kbps").get<double>();
  v.frame_rate = j.value("frame_rate", 30.0);
  v.content_type = j.value("content_type", std::string());
  v.validate();
  return v;
}

namespace detail {

inline io::Json ms_array(const std::vector<Seconds>& values) {
  io::Json arr = io::Json::array();
  for (const auto& v : values) arr.push_back(to_ms(v));
  return arr;
}

inline io::Json seconds_value(const Seconds& s) {
  if (s.denominator() == 1) return s.numerator();
  return to_double(s);
}

inline Seconds seconds_from_json(const io::Json& j) {
  if (j.is_number_integer()) return Seconds(j.get<std::int64_t>());
  return from_ms(std::llround(j.get<double>() * 1000.0));
}

}  // namespace detail

inline io::Json stimulus_to_json(const StimulusSpec& s) {
  io::Json j;
  j["id"] = s.id;
  j["tau_s"] = detail::seconds_value(s.tau);
  j["total_delay_s"] = detail::seconds_value(s.total_delay);
  j["pattern"] = std::string(to_string(s.pattern));
  j["durations_ms"] = detail::ms_array(s.session.viewing_durations());
  j["delays_ms"] = detail::ms_array(s.session.delays());
  return j;
}

inline io::Json design_to_json(const std::vector<StimulusSpec>& stimuli) {
  io::Json doc;
  doc["format"] = "swipeqoe-stimuli";
  doc["version"] = kStimulusFormatVersion;
  io::Json constants;
  constants["n_videos"] = design::kVideoCount;
  constants["viewing_durations_s"] = design::kViewingDurations;
  constants["total_delays_s"] = design::kTotalDelays;
  io::Json patterns = io::Json::array();
  for (Pattern p : kDelayPatterns) patterns.push_back(std::string(to_string(p)));
  constants["patterns"] = patterns;
  constants["last_viewing_duration_s"] = design::kLastViewingDuration;
  io::Json videos = io::Json::array();
  for (const auto& v : default_videos()) videos.push_back(video_to_json(v));
  constants["videos"] = videos;
  doc["design"] = constants;
  io::Json list = io::Json::array();
  for (const auto& s : stimuli) list.push_back(stimulus_to_json(s));
  doc["stimuli"] = list;
  return doc;
}

inline std::string serialize_design(const std::vector<StimulusSpec>& stimuli) {
  return design_to_json(stimuli).dump(2) + "\n";
}

inline StimulusSpec stimulus_from_json(const io::Json& j,
                                       std::string_view source) {
  const std::string id = j.at("id").get<std::string>();
  const auto pattern = parse_pattern(j.at("pattern").get<std::string>());
  if (!pattern) {
    fail(ErrorCode::kParse, std::string(source) + ": stimulus " + id +
                                ": unknown pattern");
  }
  StimulusSpec spec = [&] {
    try {
      return build_session(detail::seconds_from_json(j.at("tau_s")),
                           detail::seconds_from_json(j.at("total_delay_s")),
                           *pattern);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, std::string(source) + ": stimulus " + id +
                                         ": " + e.what());
    }
  }();
  spec.id = id;
  const auto durations = j.at("durations_ms").get<std::vector<std::int64_t>>();
  const auto delays = j.at("delays_ms").get<std::vector<std::int64_t>>();
  const auto expect_durations = detail::ms_array(spec.session.viewing_durations())
                                    .get<std::vector<std::int64_t>>();
  const auto expect_delays =
      detail::ms_array(spec.session.delays()).get<std::vector<std::int64_t>>();
  if (durations != expect_durations || delays != expect_delays) {
    fail(ErrorCode::kParse, std::string(source) + ": stimulus " + id +
                                ": millisecond timings do not match its "
                                "tau/total_delay/pattern");
  }
  return spec;
}

inline std::vector<StimulusSpec> parse_design(std::string_view text,
                                              std::string_view source) {
  const io::Json doc = io::parse_json(text, source);
  return io::with_schema_errors(source, [&] {
    if (doc.at("format").get<std::string>() != "swipeqoe-stimuli") {
      fail(ErrorCode::kParse, std::string(source) + ": not a stimulus set");
    }
    if (doc.at("version").get<int>() != kStimulusFormatVersion) {
      fail(ErrorCode::kParse,
           std::string(source) + ": unsupported stimulus-set version");
    }
    std::vector<StimulusSpec> out;
    for (const auto& item : doc.at("stimuli")) {
      out.push_back(stimulus_from_json(item, source));
    }
    return out;
  });
}

inline std::vector<StimulusSpec> load_design(const std::string& path) {
  return parse_design(io::read_file(path), path);
}

// Free-form sessions, e.g. those realized by the playback simulator.
inline io::Json session_to_json(const std::string& id, const Session& s) {
  io::Json j;
  j["format"] = "swipeqoe-session";
  j["version"] = kSessionFormatVersion;
  j["id"] = id;
  j["video_ids"] = s.video_ids();
  j["durations_ms"] = detail::ms_array(s.viewing_durations());
  j["delays_ms"] = detail::ms_array(s.delays());
  return j;
}

inline Session session_from_json(const io::Json& j, std::string_view source) {
  return io::with_schema_errors(source, [&] {
    const auto ids = j.at("video_ids").get<std::vector<std::string>>();
    std::vector<Seconds> durations, delays;
    for (auto ms : j.at("durations_ms").get<std::vector<std::int64_t>>()) {
      durations.push_back(from_ms(ms));
    }
    for (auto ms : j.at("delays_ms").get<std::vector<std::int64_t>>()) {
      delays.push_back(from_ms(ms));
    }
    try {
      return Session(ids, durations, delays);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, std::string(source) + ": " + e.what());
    }
  });
}

}  // namespace swipeqoe
