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

// Reference QoE predictors from the stalling / zapping literature.
//
// Every baseline is described by a record in an external parameter file:
//
//   {"model_id": "hossfeld", "display_name": "...", "source_citation": "...",
//    "form": "exponential-stall", "parameters": {"amplitude": ..., ...}}
//
// The form selects the formula; the constants come only from the file so
// that their provenance stays auditable. Models with form "external" are
// adapter slots: they score nothing until a scorer is attached.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "swipeqoe/core.hpp"
#include "swipeqoe/text_io.hpp"

namespace swipeqoe {

// What the reference models see of a session: the delays stripped of their
// positions.
struct BaselineInput {
  double total_delay = 0.0;
  std::size_t delay_count = 0;
  std::vector<double> per_event_delays;
  double total_media_duration = 0.0;

  static BaselineInput from_session(const Session& s) {
    BaselineInput in;
    for (const auto& d : s.delays()) {
      if (d > Seconds(0)) in.per_event_delays.push_back(to_double(d));
    }
    in.total_delay = to_double(s.total_delay());
    in.delay_count = in.per_event_delays.size();
    in.total_media_duration = to_double(s.total_media_duration());
    return in;
  }

  // A single event of the given length; zero length means no event.
  static BaselineInput single_event(double length, double media_duration = 1.0) {
    BaselineInput in;
    in.total_delay = length;
    if (length > 0) in.per_event_delays.push_back(length);
    in.delay_count = in.per_event_delays.size();
    in.total_media_duration = media_duration;
    return in;
  }

  void validate() const {
    double sum = 0.0;
    std::size_t positive = 0;
    for (double d : per_event_delays) {
      require(d >= 0.0, "baseline input: negative delay");
      sum += d;
      positive += d > 0.0 ? 1 : 0;
    }
    require(std::abs(sum - total_delay) <= 1e-9 * std::max(1.0, total_delay),
            "baseline input: total_delay must equal the sum of event delays");
    require(positive == delay_count,
            "baseline input: delay_count must count the positive delays");
  }
};

using ExternalScorer = std::function<double(const BaselineInput&)>;

struct BaselineModel {
  std::string model_id;
  std::string display_name;
  std::string source_citation;
  std::string form;
  std::map<std::string, double> parameters;
  std::string transcription_note;

  double param(const std::string& name) const {
    const auto it = parameters.find(name);
    if (it == parameters.end()) {
      fail(ErrorCode::kInvalidArgument,
           "baseline " + model_id + ": missing parameter '" + name + "'");
    }
    return it->second;
  }
};

namespace baseline_forms {

// Logarithmic response to a single zapping delay, bounded to the rating
// scale. A zero-length delay scores the scale maximum.
inline double log_zapping(const BaselineModel& m, const BaselineInput& in) {
  const double lo = m.param("scale_min");
  const double hi = m.param("scale_max");
  if (in.total_delay <= 0.0) return hi;
  const double raw = m.param("intercept") + m.param("log_slope") * std::log(in.total_delay);
  return std::clamp(raw, lo, hi);
}

// amplitude * exp(-(length_coeff * L + count_coeff) * N) + floor
inline double exponential_stall(const BaselineModel& m, const BaselineInput& in) {
  const double n = static_cast<double>(in.delay_count);
  return m.param("amplitude") *
             std::exp(-(m.param("length_coeff") * in.total_delay +
                        m.param("count_coeff")) *
                      n) +
         m.param("floor");
}

// intercept + per_second * total stall time + per_event * stall count
inline double linear_stall(const BaselineModel& m, const BaselineInput& in) {
  return m.param("intercept") + m.param("per_second") * in.total_delay +
         m.param("per_event") * static_cast<double>(in.delay_count);
}

// Cumulative impairment: each event costs a fixed amount plus a term
// logarithmic in its length.
inline double cumulative_log_stall(const BaselineModel& m, const BaselineInput& in) {
  double impairment = 0.0;
  for (double d : in.per_event_delays) {
    if (d <= 0.0) continue;
    impairment += m.param("event_cost") +
                  m.param("length_weight") * std::log1p(d / m.param("length_ref"));
  }
  return m.param("max_quality") - impairment;
}

}  // namespace baseline_forms

inline const std::vector<std::string>& known_baseline_forms() {
  static const std::vector<std::string> kForms = {
      "log-zapping", "exponential-stall", "linear-stall", "cumulative-log-stall",
      "external"};
  return kForms;
}

class BaselineRegistry {
 public:
  BaselineRegistry() = default;

  explicit BaselineRegistry(std::vector<BaselineModel> models)
      : models_(std::move(models)) {
    for (const auto& m : models_) {
      const auto& forms = known_baseline_forms();
      if (std::find(forms.begin(), forms.end(), m.form) == forms.end()) {
        fail(ErrorCode::kInvalidArgument,
             "baseline " + m.model_id + ": unknown form '" + m.form + "'");
      }
    }
  }

  const std::vector<BaselineModel>& models() const { return models_; }

  bool contains(std::string_view id) const { return find(id) != nullptr; }

  const BaselineModel& get(std::string_view id) const {
    const BaselineModel* m = find(id);
    if (m == nullptr) {
      fail(ErrorCode::kUnknownModel, "unknown model id '" + std::string(id) + "'");
    }
    return *m;
  }

  // True when predict() can score this model.
  bool implemented(std::string_view id) const {
    const auto& m = get(id);
    return m.form != "external" || external_.count(m.model_id) > 0;
  }

  void attach_external(const std::string& id, ExternalScorer scorer) {
    const auto& m = get(id);
    require(m.form == "external",
            "model " + id + " is not an external adapter slot");
    external_[id] = std::move(scorer);
  }

  double predict(std::string_view id, const BaselineInput& in) const {
    in.validate();
    const auto& m = get(id);
    if (m.form == "log-zapping") return baseline_forms::log_zapping(m, in);
    if (m.form == "exponential-stall") return baseline_forms::exponential_stall(m, in);
    if (m.form == "linear-stall") return baseline_forms::linear_stall(m, in);
    if (m.form == "cumulative-log-stall") {
      return baseline_forms::cumulative_log_stall(m, in);
    }
    const auto it = external_.find(m.model_id);
    if (it == external_.end()) {
      fail(ErrorCode::kUnimplemented,
           "model " + m.model_id + " has no external scorer configured");
    }
    return it->second(in);
  }

 private:
  const BaselineModel* find(std::string_view id) const {
    for (const auto& m : models_) {
      if (m.model_id == id) return &m;
    }
    return nullptr;
  }

  std::vector<BaselineModel> models_;
  std::map<std::string, ExternalScorer> external_;
};

inline BaselineRegistry parse_baseline_registry(std::string_view text,
                                                std::string_view source) {
  const io::Json doc = io::parse_json(text, source);
  return io::with_schema_errors(source, [&] {
    std::vector<BaselineModel> models;
    for (const auto& rec : doc.at("models")) {
      BaselineModel m;
      m.model_id = rec.at("model_id").get<std::string>();
      m.display_name = rec.value("display_name", m.model_id);
      m.source_citation = rec.at("source_citation").get<std::string>();
      m.form = rec.at("form").get<std::string>();
      m.transcription_note = rec.value("transcription_note", std::string());
      if (rec.contains("parameters")) {
        for (const auto& [name, value] : rec.at("parameters").items()) {
          m.parameters[name] = value.get<double>();
        }
      }
      models.push_back(std::move(m));
    }
    return BaselineRegistry(std::move(models));
  });
}

inline BaselineRegistry load_baseline_registry(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kMissingParameterFile, "baseline parameter file not found: " + path);
  }
  return parse_baseline_registry(io::read_file(path), path);
}

}  // namespace swipeqoe
