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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "netsim_instances.hpp"
#include "swipeqoe/netsim.hpp"

namespace sq = swipeqoe;
namespace ns = swipeqoe::netsim;
using sq::Seconds;
using sq::testing::TraceShape;

namespace {

sq::Video video(const std::string& id, double duration_s, double kbps) {
  return {id, duration_s, {720, 1080}, kbps, 30, ""};
}

ns::SwipeScript script(std::initializer_list<std::int64_t> seconds) {
  ns::SwipeScript s;
  for (auto v : seconds) s.viewing_durations.emplace_back(v);
  return s;
}

std::vector<std::string> event_names(const ns::SimulationResult& r) {
  std::vector<std::string> out;
  for (const auto& e : r.events) out.push_back(e.event);
  return out;
}

}  // namespace

TEST(Simulate, SingleVideoOverSlowLinkWaitsTwentySeconds) {
  const auto r = ns::simulate_session({video("a", 10, 1000)}, ns::BandwidthTrace::constant(500),
                                      {1}, script({3}));
  EXPECT_EQ(r.startup_delay_us, 20'000'000);
  EXPECT_EQ(r.playback_start_us[0], 20'000'000);
  EXPECT_EQ(r.downloads.size(), 1u);
  EXPECT_EQ(r.downloads[0].finish_us, 20'000'000);
}

TEST(Simulate, SecondVideoNotPreloadedWaitsForItsBytes) {
  // k = 0: video b starts downloading only at the swipe, 10,000 kb at 500 kbps.
  const auto r = ns::simulate_session({video("a", 1, 500), video("b", 10, 1000)},
                                      ns::BandwidthTrace::constant(500), {0}, script({4, 2}));
  EXPECT_EQ(r.startup_delay_us, 1'000'000);
  EXPECT_EQ(r.swipe_us[0], 5'000'000);
  EXPECT_EQ(r.delays_us[0], 20'000'000);
  EXPECT_EQ(r.session.delays()[0], Seconds(20));
}

TEST(Simulate, InfiniteBandwidthHasNoDelays) {
  const std::vector<sq::Video> videos = sq::default_videos();
  ns::SwipeScript s;
  for (int i = 0; i < 6; ++i) s.viewing_durations.push_back(i == 5 ? 1 : 4);
  for (std::size_t k : {0u, 1u, 3u}) {
    const auto r = ns::simulate_session(videos, ns::BandwidthTrace::constant(INFINITY), {k}, s);
    EXPECT_EQ(r.startup_delay_us, 0);
    const auto expected = sq::build_session(4, 0, sq::Pattern::P0).session;
    EXPECT_EQ(r.session, expected);
  }
}

TEST(Simulate, BandwidthEqualToBitrateKeepsPaceAfterFirstVideo) {
  const std::vector<sq::Video> videos = {video("a", 10, 1000), video("b", 10, 1000),
                                         video("c", 10, 1000)};
  const auto r =
      ns::simulate_session(videos, ns::BandwidthTrace::constant(1000), {1}, script({10, 10, 10}));
  EXPECT_EQ(r.startup_delay_us, 10'000'000);
  EXPECT_EQ(r.delays_us, (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_EQ(r.playback_start_us, (std::vector<std::int64_t>{10'000'000, 20'000'000, 30'000'000}));
  // The download of c starts when the user reaches b.
  ASSERT_EQ(r.downloads.size(), 3u);
  EXPECT_EQ(r.downloads[2].start_us, 20'000'000);
  EXPECT_EQ(r.downloads[2].finish_us, 30'000'000);
}

TEST(Simulate, DownloadsFinishingAtTheSwipeInstantCountAsReady) {
  const auto r = ns::simulate_session({video("a", 2, 1000), video("b", 2, 1000)},
                                      ns::BandwidthTrace::constant(1000), {1}, script({2, 1}));
  EXPECT_EQ(r.swipe_us[0], 4'000'000);
  EXPECT_EQ(r.downloads[1].finish_us, 4'000'000);
  EXPECT_EQ(r.delays_us[0], 0);
}

TEST(Simulate, PartialDownloadsAreResumed) {
  // The user reaches c while b is still downloading; nothing is discarded,
  // so c waits for the rest of b and then its own bytes.
  const std::vector<sq::Video> videos = {video("a", 1, 1000), video("b", 20, 1000),
                                         video("c", 1, 1000)};
  const auto r =
      ns::simulate_session(videos, ns::BandwidthTrace::constant(1000), {2}, script({1, 1, 1}));
  EXPECT_EQ(r.downloads[1].start_us, 1'000'000);
  EXPECT_EQ(r.downloads[1].finish_us, 21'000'000);
  EXPECT_EQ(r.downloads[2].finish_us, 22'000'000);
}

TEST(Simulate, ConservationOnRandomTraces) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = sq::testing::random_instance(rng, TraceShape::kPiecewise);
    const auto r = sq::testing::run(inst, inst.low, inst.queue_depth);
    ASSERT_EQ(r.downloads.size(), inst.videos.size());
    for (const auto& d : r.downloads) {
      const auto& v = inst.videos[d.video];
      const double size_kb = v.bitrate_kbps * v.duration_s;
      EXPECT_NEAR(sq::testing::integrate_kb(inst.low, d.start_us, d.finish_us), size_kb, 1.0)
          << "trial " << trial << " video " << d.video;
    }
  }
}

TEST(Simulate, HigherConstantBandwidthNeverIncreasesDelays) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = sq::testing::random_instance(rng, TraceShape::kConstant);
    EXPECT_LE(sq::testing::worst_increase(sq::testing::run(inst, inst.low, inst.queue_depth),
                                          sq::testing::run(inst, inst.high, inst.queue_depth)),
              0)
        << "trial " << trial;
  }
}

TEST(Simulate, HigherNonIncreasingTraceNeverIncreasesDelays) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = sq::testing::random_instance(rng, TraceShape::kNonIncreasing);
    EXPECT_LE(sq::testing::worst_increase(sq::testing::run(inst, inst.low, inst.queue_depth),
                                          sq::testing::run(inst, inst.high, inst.queue_depth)),
              0)
        << "trial " << trial;
  }
}

TEST(Simulate, DeeperQueueNeverIncreasesDelaysOnConstantLinks) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = sq::testing::random_instance(rng, TraceShape::kConstant);
    EXPECT_LE(sq::testing::worst_increase(sq::testing::run(inst, inst.low, inst.queue_depth),
                                          sq::testing::run(inst, inst.low, inst.queue_depth + 1)),
              0)
        << "trial " << trial;
  }
}

TEST(Simulate, FasterEarlyLinkCanDelayALaterVideo) {
  // Two-video counterexample for time-varying traces: with the faster start
  // the user reaches b earlier inside the outage and waits longer for it.
  const std::vector<sq::Video> videos = {video("a", 2, 1000), video("b", 1, 1000)};
  const auto s = script({2, 1});
  const std::vector<ns::BandwidthSample> slow = {{0, 500}, {4, 0}, {10, 1000}};
  const std::vector<ns::BandwidthSample> fast = {{0, 1000}, {4, 0}, {10, 1000}};
  const auto a = ns::simulate_session(videos, ns::BandwidthTrace(slow), {0}, s);
  const auto b = ns::simulate_session(videos, ns::BandwidthTrace(fast), {0}, s);
  EXPECT_EQ(a.delays_us[0], 5'000'000);
  EXPECT_EQ(b.delays_us[0], 7'000'000);
}

TEST(Simulate, EventLogIsConsistent) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = sq::testing::random_instance(rng, TraceShape::kPiecewise);
    const auto r = sq::testing::run(inst, inst.low, inst.queue_depth);
    std::int64_t last = 0;
    std::map<std::string, int> counts;
    for (const auto& e : r.events) {
      EXPECT_GE(e.t_us, last);
      last = e.t_us;
      counts[e.event]++;
    }
    const int n = static_cast<int>(inst.videos.size());
    EXPECT_EQ(counts["download_start"], n);
    EXPECT_EQ(counts["download_finish"], n);
    EXPECT_EQ(counts["playback_start"], n);
    EXPECT_EQ(counts["swipe"], n);
    EXPECT_EQ(counts["session_end"], 1);
    EXPECT_EQ(counts["stall_start"] + (r.startup_delay_us > 0 ? 1 : 0), counts["stall_end"]);
    EXPECT_LE(counts["trace_extended"], 1);
    EXPECT_EQ(r.playback_start_us[0], r.startup_delay_us);
    for (int i = 1; i < n; ++i) {
      EXPECT_EQ(r.playback_start_us[i], r.swipe_us[i - 1] + r.delays_us[i - 1]);
      EXPECT_EQ(r.swipe_us[i - 1], r.playback_start_us[i - 1] +
                                       ns::to_micros(inst.script.viewing_durations[i - 1]));
    }
    EXPECT_EQ(r.delays_us.back(), 0);
    EXPECT_EQ(r.session.total_delay(), Seconds(std::accumulate(r.delays_us.begin(),
                                                               r.delays_us.end(), std::int64_t{0}),
                                               1'000'000));
  }
}

TEST(Simulate, ShortTraceIsExtendedOnceAndLogged) {
  const std::vector<ns::BandwidthSample> trace = {{0, 800}, {1, 400}};
  const auto r = ns::simulate_session({video("a", 5, 500), video("b", 5, 500)},
                                      ns::BandwidthTrace(trace), {1}, script({5, 5}));
  const auto names = event_names(r);
  EXPECT_EQ(std::count(names.begin(), names.end(), "trace_extended"), 1);
}

TEST(Simulate, ZeroBandwidthForeverIsNonTerminating) {
  const std::vector<ns::BandwidthSample> dead = {{0, 1000}, {1, 0}};
  try {
    ns::simulate_session({video("a", 10, 1000)}, ns::BandwidthTrace(dead), {1}, script({1}));
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.code(), sq::ErrorCode::kNonTerminating);
  }
  ns::SimulationOptions cap;
  cap.max_time_us = 5'000'000;
  try {
    ns::simulate_session({video("a", 10, 1000)}, ns::BandwidthTrace::constant(100), {1},
                         script({1}), cap);
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.code(), sq::ErrorCode::kNonTerminating);
  }
}

TEST(Simulate, RejectsInvalidInputs) {
  EXPECT_THROW(ns::simulate_session({}, ns::BandwidthTrace::constant(1), {1}, script({})),
               sq::Error);
  EXPECT_THROW(ns::simulate_session({video("a", 1, 1)}, ns::BandwidthTrace::constant(1), {1},
                                    script({1, 1})),
               sq::Error);
  EXPECT_THROW(ns::simulate_session({video("a", 1, 1)}, ns::BandwidthTrace::constant(1), {1},
                                    script({0})),
               sq::Error);
  EXPECT_THROW(ns::BandwidthTrace({{1, 100}}), sq::Error);
  EXPECT_THROW(ns::BandwidthTrace({{0, 100}, {0, 200}}), sq::Error);
  EXPECT_THROW(ns::BandwidthTrace({{0, -1}}), sq::Error);
}

TEST(Trace, ParsesDelimitedText) {
  const auto t = ns::parse_trace("# lab trace\ntime_s,bandwidth_kbps\n0,1200\n2.5,800\n\n", "t.csv");
  ASSERT_EQ(t.samples().size(), 2u);
  EXPECT_EQ(t.samples()[1].time_s, 2.5);
  EXPECT_EQ(t.delivered(0, 3'000'000), 1'200'000LL * 2'500'000 + 800'000LL * 500'000);
  try {
    ns::parse_trace("0,100\n2,50\n1,20\n", "t.csv");
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.code(), sq::ErrorCode::kParse);
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
  }
  try {
    ns::parse_trace("0,100\n2,abc\n", "t.csv");
    FAIL();
  } catch (const sq::Error& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
  EXPECT_THROW(ns::parse_trace("1,100\n", "t.csv"), sq::Error);
  EXPECT_THROW(ns::parse_trace("# nothing\n", "t.csv"), sq::Error);
}

TEST(Events, SerializeAsJsonLines) {
  const auto r = ns::simulate_session({video("a", 10, 1000)}, ns::BandwidthTrace::constant(500),
                                      {1}, script({3}));
  const auto text = ns::serialize_events(r.events);
  std::size_t lines = 0;
  for (auto line : sq::io::split_lines(text)) {
    if (line.empty()) continue;
    const auto j = sq::io::Json::parse(line);
    EXPECT_TRUE(j.contains("t_us") && j.contains("event") && j.contains("video_id"));
    ++lines;
  }
  EXPECT_EQ(lines, r.events.size());
  EXPECT_EQ(ns::score_session(r.session, sq::kPublishedCoefficients), 4.52);
}
