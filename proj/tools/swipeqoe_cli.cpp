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

// swipeqoe command-line entry point.

#include <csignal>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "swipeqoe/analysis.hpp"
#include "swipeqoe/baselines.hpp"
#include "swipeqoe/core.hpp"
#include "swipeqoe/design_io.hpp"
#include "swipeqoe/fitting.hpp"
#include "swipeqoe/models.hpp"
#include "swipeqoe/netsim.hpp"
#include "swipeqoe/raters.hpp"
#include "swipeqoe/study_service.hpp"

namespace sq = swipeqoe;

namespace {

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    sq::io::write_file(out_path, content);
  }
}

std::vector<sq::StimulusSpec> design_or_default(const std::string& path) {
  return path.empty() ? sq::generate_design() : sq::load_design(path);
}

sq::ModelCoefficients load_coefficients(const std::string& spec) {
  if (spec == "published") return sq::kPublishedCoefficients;
  const std::string text = sq::io::read_file(spec);
  return sq::coefficients_from_json(sq::io::parse_json(text, spec), spec);
}

std::string default_params_path() { return std::string(SWIPEQOE_DATA_DIR) + "/baseline_params.json"; }

std::vector<sq::LabeledSession> join_mos(const std::vector<sq::StimulusSpec>& design,
                                         const std::vector<sq::MosRecord>& mos) {
  std::map<std::string, const sq::StimulusSpec*> by_id;
  for (const auto& s : design) by_id[s.id] = &s;
  std::vector<sq::LabeledSession> out;
  for (const auto& r : mos) {
    const auto it = by_id.find(r.stimulus_id);
    if (it == by_id.end()) {
      sq::fail(sq::ErrorCode::kInvalidArgument,
               "MOS record for stimulus '" + r.stimulus_id + "' not in the design");
    }
    out.push_back({r.stimulus_id, it->second->session, r.mos});
  }
  return out;
}

std::vector<sq::MosRecord> mos_from_ratings(const std::string& path, bool screen,
                                            double threshold) {
  sq::RatingTable table = sq::load_ratings(path);
  if (screen) {
    const auto result = sq::screen_raters(table, threshold);
    for (const auto& r : result.removed) {
      std::cerr << "screened out " << r.rater_id << " (" << sq::to_string(r.reason) << ")\n";
    }
    table = table.restricted_to({result.kept.begin(), result.kept.end()});
  }
  return sq::compute_mos(table);
}

struct MosSource {
  std::string mos_path;
  std::string ratings_path;
  bool no_screen = false;
  double threshold = sq::kDefaultScreeningThreshold;

  void add_options(CLI::App* cmd) {
    auto* m = cmd->add_option("--mos", mos_path, "MOS file");
    auto* r = cmd->add_option("--ratings", ratings_path, "Ratings file (screened, then averaged)");
    m->excludes(r);
    cmd->add_flag("--no-screen", no_screen, "Skip rater screening for --ratings");
    cmd->add_option("--threshold", threshold, "Screening correlation threshold");
  }

  std::vector<sq::MosRecord> load() const {
    if (!mos_path.empty()) return sq::load_mos(mos_path);
    if (!ratings_path.empty()) return mos_from_ratings(ratings_path, !no_screen, threshold);
    sq::fail(sq::ErrorCode::kInvalidArgument, "one of --mos or --ratings is required");
  }
};

void add_grid_options(CLI::App* cmd, sq::FitConfig& cfg) {
  cmd->add_option("--lambda-min", cfg.lambda_min, "Lambda grid start");
  cmd->add_option("--lambda-max", cfg.lambda_max, "Lambda grid end");
  cmd->add_option("--lambda-step", cfg.lambda_step, "Lambda grid step");
  cmd->add_option("--tolerance", cfg.refine_tolerance, "Golden-section bracket tolerance");
}

std::vector<sq::Seconds> parse_seconds_list(const std::vector<double>& values) {
  std::vector<sq::Seconds> out;
  for (double v : values) out.push_back(sq::from_ms(std::llround(v * 1000.0)));
  return out;
}

sq::StudyServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swipe-delay QoE toolkit for short-video streaming"};
  app.require_subcommand(1);

  // generate-stimuli
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-stimuli", "Write the 132-stimulus design");
  gen->add_option("--out", gen_out, "Output path (stdout when omitted)");

  // predict
  std::string pred_design, pred_coeffs = "published", pred_model = "proposed", pred_params,
                           pred_out, pred_mos;
  bool pred_clamp = false;
  auto* pred = app.add_subcommand("predict", "Score stimuli with a QoE model");
  pred->add_option("--design", pred_design, "Stimulus set (built-in design when omitted)");
  pred->add_option("--coeffs", pred_coeffs, "'published' or a coefficients file")->capture_default_str();
  pred->add_option("--model", pred_model, "'proposed', a baseline id, or 'all'")->capture_default_str();
  pred->add_option("--params", pred_params, "Baseline parameter file");
  pred->add_option("--mos", pred_mos, "MOS file; enables aligned scores for baselines");
  pred->add_flag("--clamp", pred_clamp, "Clamp reported scores to [1, 5]");
  pred->add_option("--out", pred_out, "Output path (stdout when omitted)");

  // fit
  std::string fit_design, fit_out;
  MosSource fit_src;
  sq::FitConfig fit_cfg;
  auto* fit = app.add_subcommand("fit", "Fit the model coefficients by MSE minimization");
  fit->add_option("--design", fit_design, "Stimulus set (built-in design when omitted)");
  fit_src.add_options(fit);
  add_grid_options(fit, fit_cfg);
  fit->add_option("--out", fit_out, "Coefficients output path (stdout when omitted)");

  // evaluate
  std::string ev_design, ev_params, ev_out, ev_alignment = "evaluation";
  MosSource ev_src;
  sq::FitConfig ev_cfg;
  auto* ev = app.add_subcommand("evaluate", "Repeated train/test evaluation against baselines");
  ev->add_option("--design", ev_design, "Stimulus set (built-in design when omitted)");
  ev_src.add_options(ev);
  ev->add_option("--repeats", ev_cfg.repeats, "Number of random splits")->capture_default_str();
  ev->add_option("--train", ev_cfg.train_fraction, "Training fraction")->capture_default_str();
  ev->add_option("--seed", ev_cfg.seed, "Split seed")->capture_default_str();
  ev->add_option("--params", ev_params, "Baseline parameter file");
  ev->add_option("--alignment", ev_alignment, "Baseline alignment fitted on 'evaluation' or 'training' split")
      ->check(CLI::IsMember({"evaluation", "training"}));
  add_grid_options(ev, ev_cfg);
  ev->add_option("--out", ev_out, "JSON report path (table printed to stdout)");

  // simulate-raters
  std::string sr_design, sr_coeffs = "published", sr_out;
  double sr_a = 0.132;
  std::size_t sr_conformant = 20, sr_random = 0, sr_constant = 0;
  std::uint64_t sr_seed = 1;
  auto* sr = app.add_subcommand("simulate-raters", "Synthetic ratings under the SOS hypothesis");
  sr->add_option("--design", sr_design, "Stimulus set (built-in design when omitted)");
  sr->add_option("--coeffs", sr_coeffs, "Coefficients generating the true MOS")->capture_default_str();
  sr->add_option("--a", sr_a, "SOS parameter")->capture_default_str();
  sr->add_option("--conformant", sr_conformant, "Conformant raters")->capture_default_str();
  sr->add_option("--random", sr_random, "Uniform-random raters")->capture_default_str();
  sr->add_option("--constant", sr_constant, "Constant-score raters")->capture_default_str();
  sr->add_option("--seed", sr_seed, "Base seed")->capture_default_str();
  sr->add_option("--out", sr_out, "Ratings output path (stdout when omitted)");

  // screen
  std::string sc_ratings, sc_out, sc_report;
  double sc_threshold = sq::kDefaultScreeningThreshold;
  auto* sc = app.add_subcommand("screen", "Pearson screening of raters");
  sc->add_option("--ratings", sc_ratings, "Ratings file")->required();
  sc->add_option("--threshold", sc_threshold, "Correlation threshold")->capture_default_str();
  sc->add_option("--out", sc_out, "Ratings of kept raters (stdout when omitted)");
  sc->add_option("--report", sc_report, "JSON screening report path");

  // mos
  std::string mos_ratings, mos_out;
  bool mos_screen = false;
  double mos_threshold = sq::kDefaultScreeningThreshold;
  auto* mos = app.add_subcommand("mos", "MOS, 95% CI and SOS per stimulus");
  mos->add_option("--ratings", mos_ratings, "Ratings file")->required();
  mos->add_flag("--screen", mos_screen, "Screen raters first");
  mos->add_option("--threshold", mos_threshold, "Screening threshold")->capture_default_str();
  mos->add_option("--out", mos_out, "MOS output path (stdout when omitted)");

  // sos
  std::string sos_mos;
  auto* sos = app.add_subcommand("sos", "Fit the SOS parameter a");
  sos->add_option("--mos", sos_mos, "MOS file")->required();

  // simulate-session
  std::string ss_trace, ss_videos, ss_out, ss_events, ss_coeffs = "published";
  std::vector<double> ss_viewing;
  std::size_t ss_depth = 1;
  double ss_cap = 3600.0;
  auto* ss = app.add_subcommand("simulate-session", "Realize swipe delays from a bandwidth trace");
  ss->add_option("--trace", ss_trace, "Trace file (time_s,bandwidth_kbps)")->required();
  ss->add_option("--videos", ss_videos, "JSON array of videos (built-in six when omitted)");
  ss->add_option("--viewing", ss_viewing, "Viewing duration per video in seconds")
      ->required()->delimiter(',');
  ss->add_option("--queue-depth", ss_depth, "Videos preloaded ahead")->capture_default_str();
  ss->add_option("--max-time", ss_cap, "Simulated-time cap in seconds")->capture_default_str();
  ss->add_option("--coeffs", ss_coeffs, "Coefficients used to score the session")->capture_default_str();
  ss->add_option("--out", ss_out, "Session output path (stdout when omitted)");
  ss->add_option("--events", ss_events, "Event log path");

  // serve
  sq::StudyConfig sv_cfg;
  std::string sv_design, sv_listen = "127.0.0.1:8080";
  bool sv_fixed_order = false;
  int sv_subset = -1;
  auto* sv = app.add_subcommand("serve", "Host the rating-collection service");
  sv->add_option("--design", sv_design, "Stimulus set (built-in design when omitted)");
  sv->add_option("--ratings-out", sv_cfg.ratings_path, "Ratings file (appended)")->required();
  sv->add_option("--listen", sv_listen, "host:port")->capture_default_str();
  sv->add_option("--training", sv_cfg.training_stimuli, "Training stimuli")->capture_default_str();
  sv->add_option("--seed", sv_cfg.seed, "Study seed")->capture_default_str();
  sv->add_flag("--fixed-order", sv_fixed_order, "Present test stimuli in design order");
  sv->add_option("--subset", sv_subset, "Restrict to one of --subsets groups (0-based)");
  sv->add_option("--subsets", sv_cfg.subset_count, "Number of session subsets")->capture_default_str();
  sv->add_option("--media-dir", sv_cfg.media_dir, "Directory served under /media");
  sv->add_option("--ui-dir", sv_cfg.ui_dir, "Static study UI served under /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    sq::io::Json err;
    err["error"] = {{"code", "usage"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  try {
    if (*gen) {
      emit(gen_out, sq::serialize_design(sq::generate_design()));
    } else if (*pred) {
      const auto design = design_or_default(pred_design);
      std::vector<std::string> models;
      std::optional<sq::BaselineRegistry> registry;
      if (pred_model != "proposed") {
        registry = sq::load_baseline_registry(pred_params.empty() ? default_params_path() : pred_params);
      }
      if (pred_model == "all") {
        models.push_back("proposed");
        for (const auto& m : registry->models()) {
          if (registry->implemented(m.model_id)) models.push_back(m.model_id);
        }
      } else {
        if (pred_model != "proposed") registry->get(pred_model);
        models.push_back(pred_model);
      }
      const auto coeffs = load_coefficients(pred_coeffs);
      std::map<std::string, double> mos_by_id;
      if (!pred_mos.empty()) {
        for (const auto& r : sq::load_mos(pred_mos)) mos_by_id[r.stimulus_id] = r.mos;
      }
      std::string out = sq::io::version_line("predictions", 1) +
                        "\nstimulus_id,model_id,raw_score,aligned_score\n";
      for (const auto& model : models) {
        std::vector<double> raw;
        for (const auto& s : design) {
          raw.push_back(model == "proposed"
                            ? sq::predict_proposed(s.session, coeffs)
                            : registry->predict(model, sq::BaselineInput::from_session(s.session)));
        }
        std::optional<sq::AlignmentFit> fit;
        if (!mos_by_id.empty() && model != "proposed") {
          std::vector<double> xs, ys;
          for (std::size_t i = 0; i < design.size(); ++i) {
            const auto it = mos_by_id.find(design[i].id);
            if (it == mos_by_id.end()) continue;
            xs.push_back(raw[i]);
            ys.push_back(it->second);
          }
          fit = sq::align(xs, ys);
        }
        for (std::size_t i = 0; i < design.size(); ++i) {
          const double score = pred_clamp ? sq::clamp_to_scale(raw[i]) : raw[i];
          out += design[i].id + "," + model + "," + sq::io::format_double(score) + ",";
          if (fit) {
            const double aligned = fit->apply(raw[i]);
            out += sq::io::format_double(pred_clamp ? sq::clamp_to_scale(aligned) : aligned);
          }
          out += "\n";
        }
      }
      emit(pred_out, out);
    } else if (*fit) {
      const auto data = join_mos(design_or_default(fit_design), fit_src.load());
      const auto result = sq::fit_proposed_detailed(data, fit_cfg);
      auto j = sq::coefficients_to_json(result.coefficients);
      j["mse"] = result.mse;
      j["stimuli"] = data.size();
      emit(fit_out, j.dump(2) + "\n");
    } else if (*ev) {
      const auto data = join_mos(design_or_default(ev_design), ev_src.load());
      const auto registry =
          sq::load_baseline_registry(ev_params.empty() ? default_params_path() : ev_params);
      ev_cfg.alignment = ev_alignment == "training" ? sq::AlignmentMode::kTrainingSet
                                                    : sq::AlignmentMode::kEvaluationSet;
      const auto report = sq::evaluate_protocol(data, registry, ev_cfg);
      std::cout << sq::format_report_table(report);
      if (!ev_out.empty()) sq::io::write_file(ev_out, sq::report_to_json(report).dump(2) + "\n");
    } else if (*sr) {
      const auto design = design_or_default(sr_design);
      const auto coeffs = load_coefficients(sr_coeffs);
      std::vector<sq::TrueMos> truth;
      for (const auto& s : design) {
        truth.push_back({s.id, sq::clamp_to_scale(sq::predict_proposed(s.session, coeffs))});
      }
      const auto panel = sq::make_panel(sr_conformant, sr_random, sr_seed, sr_constant);
      const auto sim = sq::simulate_ratings(truth, sr_a, panel);
      for (const auto& w : sim.warnings) std::cerr << "warning: " << w << "\n";
      emit(sr_out, sq::serialize_ratings(sim.table));
    } else if (*sc) {
      const auto table = sq::load_ratings(sc_ratings);
      const auto result = sq::screen_raters(table, sc_threshold);
      emit(sc_out, sq::serialize_ratings(table.restricted_to({result.kept.begin(), result.kept.end()})));
      sq::io::Json rep;
      rep["threshold"] = sc_threshold;
      rep["rounds"] = result.rounds;
      rep["kept"] = result.kept;
      sq::io::Json removed = sq::io::Json::array();
      for (const auto& r : result.removed) {
        removed.push_back({{"rater_id", r.rater_id},
                           {"reason", std::string(sq::to_string(r.reason))},
                           {"correlation", r.correlation ? sq::io::Json(*r.correlation) : sq::io::Json(nullptr)},
                           {"round", r.round}});
      }
      rep["removed"] = removed;
      if (!sc_report.empty()) {
        sq::io::write_file(sc_report, rep.dump(2) + "\n");
      } else {
        std::cerr << rep.dump() << "\n";
      }
    } else if (*mos) {
      const auto records = mos_from_ratings(mos_ratings, mos_screen, mos_threshold);
      for (const auto& r : records) {
        if (r.flagged()) std::cerr << "warning: " << r.stimulus_id << ": fewer than 2 ratings, CI undefined\n";
      }
      emit(mos_out, sq::serialize_mos(records));
    } else if (*sos) {
      const auto fitted = sq::fit_sos(sq::load_mos(sos_mos));
      sq::io::Json j;
      j["a"] = fitted.a;
      j["records_used"] = fitted.records_used;
      std::cout << j.dump() << "\n";
    } else if (*ss) {
      std::vector<sq::Video> videos;
      if (ss_videos.empty()) {
        videos = sq::default_videos();
      } else {
        const auto doc = sq::io::parse_json(sq::io::read_file(ss_videos), ss_videos);
        sq::io::with_schema_errors(ss_videos, [&] {
          for (const auto& v : doc) videos.push_back(sq::video_from_json(v));
          return 0;
        });
      }
      if (ss_viewing.size() == 1 && videos.size() > 1) ss_viewing.resize(videos.size(), ss_viewing[0]);
      const auto trace = sq::netsim::parse_trace(sq::io::read_file(ss_trace), ss_trace);
      sq::netsim::SimulationOptions opts;
      opts.max_time_us = std::llround(ss_cap * 1e6);
      const auto result = sq::netsim::simulate_session(
          videos, trace, {ss_depth}, {parse_seconds_list(ss_viewing)}, opts);
      auto j = sq::session_to_json("simulated", result.session);
      j["startup_delay_ms"] = sq::to_ms(sq::Seconds(result.startup_delay_us, 1'000'000));
      j["qoe"] = sq::netsim::score_session(result.session, load_coefficients(ss_coeffs));
      emit(ss_out, j.dump(2) + "\n");
      if (!ss_events.empty()) sq::io::write_file(ss_events, sq::netsim::serialize_events(result.events));
    } else if (*sv) {
      if (sv_subset >= 0) sv_cfg.subset = sv_subset;
      sv_cfg.randomize_order = !sv_fixed_order;
      sv_cfg.stimulus_file = sv_design;
      const auto colon = sv_listen.rfind(':');
      if (colon == std::string::npos) {
        sq::fail(sq::ErrorCode::kInvalidArgument, "--listen expects host:port");
      }
      sv_cfg.listen_host = sv_listen.substr(0, colon);
      sv_cfg.listen_port = std::stoi(sv_listen.substr(colon + 1));
      sq::StudyService service(sv_cfg, design_or_default(sv_design));
      sq::StudyServer server(service);
      const int port = server.bind(sv_cfg.listen_host, sv_cfg.listen_port);
      if (port < 0) sq::fail(sq::ErrorCode::kIo, "cannot bind " + sv_listen);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << sv_cfg.listen_host << ":" << port << "\n";
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const sq::Error& e) {
    sq::io::Json err;
    err["error"] = {{"code", std::string(sq::to_string(e.code()))}, {"message", e.what()}};
    if (e.line() > 0) {
      err["error"]["line"] = e.line();
      err["error"]["column"] = e.column();
    }
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    sq::io::Json err;
    err["error"] = {{"code", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
