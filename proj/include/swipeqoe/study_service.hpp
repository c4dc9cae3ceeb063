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

// Rating-collection service for a lab ACR study.
//
//   GET  /playlist[?participant=ID]  training stimuli, then the participant's
//                                    seeded shuffle of the test stimuli; a
//                                    participant token is minted when absent
//   GET  /stimulus/{id}              per-video timing payload
//   POST /rating                     {participant_id, stimulus_id, score,
//                                    client_timestamps?, training?}
//   GET  /progress[?participant=ID]
//
// Every response body is a JSON document with a "version" field. Ratings
// are appended to the ratings file and fsync'ed before they are
// acknowledged; all writes go through one mutex-guarded writer.

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "swipeqoe/analysis.hpp"
#include "swipeqoe/core.hpp"
#include "swipeqoe/design_io.hpp"
#include "swipeqoe/fitting.hpp"
#include "swipeqoe/raters.hpp"

// After Eigen: resolv.h defines a _res macro that collides with Eigen names.
#include "httplib.h"

namespace swipeqoe {

inline constexpr int kServiceApiVersion = 1;
inline constexpr int kDefaultSubsetCount = 5;

struct StudyConfig {
  std::string stimulus_file;
  bool randomize_order = true;
  int training_stimuli = 4;
  std::string ratings_path;
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::uint64_t seed = 0;
  // Restrict the test phase to one of subset_count seeded random groups.
  std::optional<int> subset;
  int subset_count = kDefaultSubsetCount;
  std::string media_dir;
  std::string ui_dir;

  void validate() const {
    require(training_stimuli >= 0, "training stimulus count must be >= 0");
    require(subset_count >= 1, "subset count must be >= 1");
    if (subset) {
      require(*subset >= 0 && *subset < subset_count, "subset index out of range");
    }
    require(!ratings_path.empty(), "ratings output path is required");
  }
};

struct ServiceResponse {
  int status = 200;
  io::Json body;
};

class StudyService {
 public:
  StudyService(StudyConfig config, std::vector<StimulusSpec> stimuli)
      : config_(std::move(config)), stimuli_(std::move(stimuli)) {
    config_.validate();
    require(!stimuli_.empty(), "stimulus set is empty");
    for (std::size_t i = 0; i < stimuli_.size(); ++i) index_[stimuli_[i].id] = i;
    require(index_.size() == stimuli_.size(), "stimulus ids must be unique");
    require(static_cast<std::size_t>(config_.training_stimuli) <= stimuli_.size(),
            "more training stimuli than stimuli");

    // Training items and subsets are fixed by the study seed.
    const auto perm = split_permutation(stimuli_.size(), config_.seed, -1);
    for (int k = 0; k < config_.training_stimuli; ++k) {
      training_.push_back(stimuli_[perm[k]].id);
    }
    const auto subset_perm = split_permutation(stimuli_.size(), config_.seed, -2);
    for (std::size_t k = 0; k < subset_perm.size(); ++k) {
      const int group = static_cast<int>(k % static_cast<std::size_t>(config_.subset_count));
      if (!config_.subset || group == *config_.subset) {
        test_set_.push_back(subset_perm[k]);
      }
    }
    std::sort(test_set_.begin(), test_set_.end());
    open_ratings_file();
  }

  ~StudyService() {
    if (fd_ >= 0) ::close(fd_);
  }
  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  const StudyConfig& config() const { return config_; }

  std::string mint_participant() {
    std::random_device rd;
    const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "p%016llx", static_cast<unsigned long long>(v));
    return buf;
  }

  // Test-phase stimulus ids in presentation order for a participant.
  std::vector<std::string> test_order(const std::string& participant) const {
    std::vector<std::size_t> order = test_set_;
    if (config_.randomize_order) {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      h = detail::fnv1a(participant, h);
      const auto perm = split_permutation(order.size(), config_.seed ^ h, 0);
      std::vector<std::size_t> shuffled;
      for (std::size_t k : perm) shuffled.push_back(order[k]);
      order = std::move(shuffled);
    }
    std::vector<std::string> ids;
    for (std::size_t i : order) ids.push_back(stimuli_[i].id);
    return ids;
  }

  ServiceResponse playlist(std::optional<std::string> participant) {
    if (!participant || participant->empty()) participant = mint_participant();
    if (!detail::is_plain_token(*participant)) {
      return error(400, "invalid_participant", "participant id must be a plain token");
    }
    io::Json body = envelope();
    body["participant_id"] = *participant;
    io::Json items = io::Json::array();
    for (const auto& id : training_) items.push_back({{"stimulus_id", id}, {"role", "training"}});
    for (const auto& id : test_order(*participant)) {
      items.push_back({{"stimulus_id", id}, {"role", "test"}});
    }
    body["items"] = items;
    return {200, body};
  }

  ServiceResponse stimulus(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return error(404, "unknown_stimulus", "no stimulus " + id);
    const auto& spec = stimuli_[it->second];
    io::Json body = envelope();
    body["stimulus_id"] = spec.id;
    io::Json videos = io::Json::array();
    const auto& s = spec.session;
    for (std::size_t i = 0; i < s.size(); ++i) {
      videos.push_back({{"media", "media/" + s.video_ids()[i] + ".mp4"},
                        {"viewing_duration_ms", to_ms(s.viewing_durations()[i])},
                        {"post_delay_ms", to_ms(s.delays()[i])}});
    }
    body["videos"] = videos;
    return {200, body};
  }

  ServiceResponse submit(const std::string& raw_body) {
    io::Json req;
    try {
      req = io::Json::parse(raw_body);
    } catch (const nlohmann::json::exception&) {
      return error(400, "malformed_body", "request body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("participant_id") || !req.contains("stimulus_id") ||
        !req.contains("score") || !req["participant_id"].is_string() ||
        !req["stimulus_id"].is_string()) {
      return error(400, "malformed_body",
                   "expected participant_id, stimulus_id and score fields");
    }
    const std::string participant = req["participant_id"].get<std::string>();
    const std::string stimulus_id = req["stimulus_id"].get<std::string>();
    if (!detail::is_plain_token(participant)) {
      return error(400, "invalid_participant", "participant id must be a plain token");
    }
    if (!index_.count(stimulus_id)) {
      return error(404, "unknown_stimulus", "no stimulus " + stimulus_id);
    }
    const auto& score_json = req["score"];
    if (!score_json.is_number_integer() || score_json.get<std::int64_t>() < kMinScore ||
        score_json.get<std::int64_t>() > kMaxScore) {
      return error(422, "invalid_score", "score must be an integer in 1..5");
    }
    const int score = static_cast<int>(score_json.get<std::int64_t>());
    if (req.value("training", false)) {
      io::Json body = envelope();
      body["status"] = "training";
      body["persisted"] = false;
      return {200, body};
    }

    std::lock_guard<std::mutex> lock(writer_);
    if (table_.contains(participant, stimulus_id)) {
      return error(409, "duplicate_rating",
                   "participant already rated " + stimulus_id);
    }
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    Rating r{participant, stimulus_id, score, std::to_string(now)};
    append_durably(format_rating_line(r) + "\n");
    table_.add(std::move(r));
    io::Json body = envelope();
    body["status"] = "stored";
    body["persisted"] = true;
    return {201, body};
  }

  ServiceResponse progress(std::optional<std::string> participant) const {
    std::lock_guard<std::mutex> lock(writer_);
    io::Json body = envelope();
    body["test_stimuli"] = test_set_.size();
    if (participant && !participant->empty()) {
      std::size_t rated = 0;
      for (const auto& e : table_.entries()) {
        rated += e.rater_id == *participant ? 1 : 0;
      }
      body["participant_id"] = *participant;
      body["rated"] = rated;
      body["remaining"] = test_set_.size() > rated ? test_set_.size() - rated : 0;
    } else {
      body["participants"] = table_.raters().size();
      body["ratings"] = table_.size();
    }
    return {200, body};
  }

  std::size_t stored_ratings() const {
    std::lock_guard<std::mutex> lock(writer_);
    return table_.size();
  }

 private:
  static io::Json envelope() {
    io::Json j;
    j["version"] = kServiceApiVersion;
    return j;
  }

  static ServiceResponse error(int status, const std::string& code, const std::string& msg) {
    io::Json body = envelope();
    body["error"] = {{"code", code}, {"message", msg}};
    return {status, body};
  }

  void open_ratings_file() {
    const bool exists = std::filesystem::exists(config_.ratings_path) &&
                        std::filesystem::file_size(config_.ratings_path) > 0;
    if (exists) table_ = load_ratings(config_.ratings_path);
    fd_ = ::open(config_.ratings_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) fail(ErrorCode::kIo, "cannot open ratings file " + config_.ratings_path);
    if (!exists) append_durably(ratings_header());
  }

  void append_durably(const std::string& data) {
    std::size_t written = 0;
    while (written < data.size()) {
      const ssize_t n = ::write(fd_, data.data() + written, data.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kIo, "write to ratings file failed");
      }
      written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) fail(ErrorCode::kIo, "fsync of ratings file failed");
  }

  StudyConfig config_;
  std::vector<StimulusSpec> stimuli_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> training_;
  std::vector<std::size_t> test_set_;

  mutable std::mutex writer_;
  RatingTable table_;
  int fd_ = -1;
};

// HTTP binding of StudyService.
class StudyServer {
 public:
  explicit StudyServer(StudyService& service) : service_(service) {
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    auto param = [](const httplib::Request& req, const char* name) -> std::optional<std::string> {
      if (!req.has_param(name)) return std::nullopt;
      return req.get_param_value(name);
    };
    server_.Get("/playlist", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service_.playlist(param(req, "participant")));
    });
    server_.Get(R"(/stimulus/([^/]+))",
                [=, this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, service_.stimulus(req.matches[1]));
                });
    server_.Post("/rating", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service_.submit(req.body));
    });
    server_.Get("/progress", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service_.progress(param(req, "participant")));
    });
    const auto& cfg = service_.config();
    if (!cfg.media_dir.empty()) server_.set_mount_point("/media", cfg.media_dir);
    if (!cfg.ui_dir.empty()) server_.set_mount_point("/", cfg.ui_dir);
  }

  // Binds to host:port (port 0 picks a free port); returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  StudyService& service_;
  httplib::Server server_;
};

}  // namespace swipeqoe
