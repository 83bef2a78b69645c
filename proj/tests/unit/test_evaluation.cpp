#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "camctl/dataset_io.hpp"
#include "camctl/evaluation.hpp"
#include "helpers.hpp"

using namespace camctl;

namespace {

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.scene = test::small_scene_config();
  c.eval.episodes = 2;
  c.eval.static_episodes = 1;
  c.eval.dynamic_margin = 4;
  c.eval.controllers = {"reactive_ae_ag", "gradient_metric"};
  return c;
}

EpisodeTrace trace_from_nfm(const std::vector<int>& nfm, const std::string& controller = "x", std::size_t episode = 0) {
  EpisodeTrace t;
  t.controller = controller;
  t.scenario = "tunnel";
  t.episode = episode;
  for (std::size_t i = 0; i < nfm.size(); ++i) {
    TraceRow r;
    r.time_index = i;
    r.nfm = nfm[i];
    r.segment = SegmentTag::dynamic_lighting;
    t.rows.push_back(r);
  }
  return t;
}

EpisodeSetup setup_for(const RadianceScene& scene, const FeatureExtractor& fx, std::uint64_t seed) {
  EpisodeSetup s;
  s.scene = &scene;
  s.extractor = &fx;
  s.seed = seed;
  s.initial = metered_params(scene, 0, s.model);
  s.dynamic_margin = 4;
  return s;
}

}  // namespace

TEST(FailureRun, ThreeLowFramesFail) {
  const std::vector<int> v = {10, 10, 10};
  EXPECT_TRUE(has_failure_run(v, {20, 3}));
}

TEST(FailureRun, AlternatingValuesNeverFormARun) {
  std::vector<int> v;
  for (int i = 0; i < 30; ++i) v.push_back(i % 2 == 0 ? 10 : 25);
  EXPECT_FALSE(has_failure_run(v, {20, 3}));
}

TEST(FailureRun, BoundaryAndUndefinedValues) {
  EXPECT_FALSE(has_failure_run(std::vector<int>{20, 20, 20}, {20, 3}));
  EXPECT_FALSE(has_failure_run(std::vector<int>{19, 19}, {20, 3}));
  EXPECT_FALSE(has_failure_run(std::vector<int>{19, kUndefinedNfm, 19, 19}, {20, 3}));
  EXPECT_TRUE(has_failure_run(std::vector<int>{50, 0, 0, 0, 50}, {20, 3}));
  EXPECT_TRUE(has_failure_run(std::vector<int>{5}, {20, 1}));
  EXPECT_FALSE(has_failure_run(std::vector<int>{}, {20, 3}));
}

TEST(Median, OddAndEvenCounts) {
  EXPECT_EQ(median({301, 5350, 421}), 421.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_EQ(median({7}), 7.0);
}

TEST(SegmentStatsTest, MedianAndMinOfDefinedValues) {
  const EpisodeTrace t = trace_from_nfm({kUndefinedNfm, 301, 5350, 421});
  const auto stats = segment_stats(t, {20, 3});
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].tag, SegmentTag::dynamic_lighting);
  EXPECT_EQ(stats[0].median_nfm, 421.0);
  EXPECT_EQ(stats[0].min_nfm, 301);
  EXPECT_EQ(stats[0].frames, 3);
  EXPECT_FALSE(stats[0].tracking_failed);
  EXPECT_FALSE(stats[0].empty);
  EXPECT_LE(stats[0].min_nfm, stats[0].median_nfm);
}

TEST(SegmentStatsTest, SegmentWithoutDefinedValuesIsEmpty) {
  EpisodeTrace t = trace_from_nfm({kUndefinedNfm, 50, 60});
  t.rows[0].segment = SegmentTag::static_lighting;
  const auto stats = segment_stats(t, {20, 3});
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].tag, SegmentTag::static_lighting);
  EXPECT_TRUE(stats[0].empty);
  EXPECT_FALSE(stats[1].empty);
}

TEST(SegmentStatsTest, FailureRunsDoNotBridgeSegments) {
  EpisodeTrace t = trace_from_nfm({kUndefinedNfm, 5, 5, 100, 5, 100});
  t.rows[3].segment = SegmentTag::static_lighting;
  t.rows[5].segment = SegmentTag::static_lighting;
  // Dynamic frames are 5, 5, 5 but not consecutive in time.
  const auto stats = segment_stats(t, {20, 3});
  EXPECT_FALSE(stats[1].tracking_failed);
  EXPECT_FALSE(episode_failed(t, {20, 3}));
  t.rows[3].nfm = 5;
  EXPECT_TRUE(episode_failed(t, {20, 3}));
}

TEST(SegmentTags, PartitionEpisodeAroundTransitions) {
  const RadianceScene s = test::small_scene(1);
  const auto tags = segment_tags(s, 4);
  ASSERT_EQ(tags.size(), s.length());
  const auto transitions = transition_frames(s);
  for (std::size_t t = 0; t < tags.size(); ++t) {
    bool near = false;
    for (std::size_t u = 0; u + 1 < s.length(); ++u) {
      if (!transitions[u]) continue;
      const long lo = static_cast<long>(u) - 4, hi = static_cast<long>(u) + 1 + 4;
      near = near || (static_cast<long>(t) >= lo && static_cast<long>(t) <= hi);
    }
    EXPECT_EQ(tags[t] == SegmentTag::dynamic_lighting, near) << t;
  }
  EXPECT_EQ(tags.front(), SegmentTag::static_lighting);
  EXPECT_TRUE(std::count(tags.begin(), tags.end(), SegmentTag::dynamic_lighting) > 0);
  const auto flat = segment_tags(test::small_scene(1, 0.0), 4);
  EXPECT_TRUE(std::all_of(flat.begin(), flat.end(), [](SegmentTag g) { return g == SegmentTag::static_lighting; }));
}

TEST(SegmentTags, NamesRoundTrip) {
  for (SegmentTag g : {SegmentTag::static_lighting, SegmentTag::dynamic_lighting}) {
    EXPECT_EQ(parse_segment_tag(to_string(g)), g);
  }
  EXPECT_THROW(parse_segment_tag("other"), InvalidArgument);
}

TEST(RunEpisode, RowShapeAndUndefinedFirstFrame) {
  const RadianceScene s = test::small_scene(2);
  const FeatureExtractor fx;
  ReactiveAeAgController c;
  const EpisodeTrace t = run_episode(c, setup_for(s, fx, 5));
  ASSERT_EQ(t.rows.size(), s.length());
  EXPECT_EQ(t.rows[0].nfm, kUndefinedNfm);
  EXPECT_EQ(t.rows[0].params, setup_for(s, fx, 5).initial);
  const auto tags = segment_tags(s, 4);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    EXPECT_GE(t.rows[i].nfm, 0);
    EXPECT_EQ(t.rows[i].time_index, i);
    EXPECT_EQ(t.rows[i].segment, tags[i]);
  }
  EXPECT_EQ(t.controller, "reactive_ae_ag");
}

TEST(RunEpisode, StationaryScenePlusFixedControllerGivesConstantNfm) {
  RadianceScene s = test::small_scene(3, 0.0);
  std::fill(s.trajectory.begin(), s.trajectory.end(), TrajectoryStep{s.trajectory[0].x, s.trajectory[0].y, 0.0, 0.0});
  const FeatureExtractor fx;
  FixedController c(metered_params(s, 0, CameraModel{}));
  EpisodeSetup setup = setup_for(s, fx, 1);
  setup.model = test::noiseless_model(true);
  setup.initial = metered_params(s, 0, CameraModel{});
  const EpisodeTrace t = run_episode(c, setup);
  for (std::size_t i = 2; i < t.rows.size(); ++i) EXPECT_EQ(t.rows[i].nfm, t.rows[1].nfm);
  EXPECT_GT(t.rows[1].nfm, 0);
}

TEST(RunEpisode, DeterministicAndSharedAcrossIdenticalControllers) {
  const RadianceScene s = test::small_scene(4);
  const FeatureExtractor fx;
  GradientMetricController a, b;
  const EpisodeTrace x = run_episode(a, setup_for(s, fx, 9));
  const EpisodeTrace y = run_episode(b, setup_for(s, fx, 9));
  EXPECT_EQ(x, y);
  GradientMetricController c;
  EXPECT_NE(run_episode(c, setup_for(s, fx, 10)).rows, x.rows);
}

TEST(RunEpisode, NonFiniteCommandIsReported) {
  class Broken final : public Controller {
   public:
    std::string identity() const override { return "broken"; }
    ControllerCommand step(std::span<const Frame>) override {
      return {CameraParams(std::numeric_limits<double>::infinity(), 1e-3), identity()};
    }
    std::unique_ptr<Controller> clone() const override { return std::make_unique<Broken>(); }
  };
  const RadianceScene s = test::small_scene(4);
  const FeatureExtractor fx;
  Broken c;
  EXPECT_THROW(run_episode(c, setup_for(s, fx, 1)), ControllerFault);
}

TEST(MakeController, KnownIdentities) {
  const ExperimentConfig cfg;
  for (const std::string id : {"fixed", "reactive_ae_ag", "gradient_metric"}) {
    EXPECT_EQ(make_controller(id, cfg)->identity(), id);
  }
  EXPECT_THROW(make_controller("learned", cfg), InvalidArgument);
  EXPECT_THROW(make_controller("oracle", cfg), InvalidArgument);
}

TEST(Benchmark, EpisodesAreSeededAndOrdered) {
  const ExperimentConfig cfg = small_experiment();
  const auto a = benchmark_episodes(cfg);
  const auto b = benchmark_episodes(cfg);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].scenario, "tunnel");
  EXPECT_EQ(a[2].scenario, "constant");
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(scene_fingerprint(a[i].scene), scene_fingerprint(b[i].scene));
    EXPECT_EQ(a[i].noise_seed, b[i].noise_seed);
    seeds.insert(a[i].noise_seed);
  }
  EXPECT_EQ(seeds.size(), 3u);
  ExperimentConfig other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_NE(scene_fingerprint(benchmark_episodes(other)[0].scene), scene_fingerprint(a[0].scene));
}

TEST(Compare, OneRowPerScenarioControllerAndSegment) {
  const ExperimentConfig cfg = small_experiment();
  const ComparisonReport r = compare_controllers(cfg);
  EXPECT_EQ(r.traces.size(), 6u);
  // tunnel: static + dynamic per controller; constant: static only.
  ASSERT_EQ(r.rows.size(), 6u);
  std::set<std::tuple<std::string, std::string, SegmentTag>> keys;
  for (const auto& row : r.rows) keys.insert({row.scenario, row.controller, row.segment});
  EXPECT_EQ(keys.size(), 6u);
  ASSERT_EQ(r.tracking.size(), 4u);
  for (const auto& t : r.tracking) EXPECT_EQ(t.episodes, t.scenario == "tunnel" ? 2 : 1);
  const std::string text = format_report(r);
  EXPECT_NE(text.find("gradient_metric"), std::string::npos);
  EXPECT_NE(report_to_json(r, {20, 3}).find("\"tracking\""), std::string::npos);
}

TEST(Compare, NeedsTwoControllers) {
  ExperimentConfig cfg = small_experiment();
  cfg.eval.controllers = {"reactive_ae_ag"};
  EXPECT_THROW(compare_controllers(cfg), InvalidArgument);
}

TEST(Aggregate, IdenticalControllersProduceIdenticalRows) {
  const ExperimentConfig cfg = small_experiment();
  const ComparisonReport r = compare_controllers(cfg);
  std::vector<EpisodeTrace> traces;
  for (const auto& t : r.traces) {
    if (t.controller != "reactive_ae_ag") continue;
    traces.push_back(t);
    traces.back().controller = "copy_a";
    traces.push_back(t);
    traces.back().controller = "copy_b";
  }
  const ComparisonReport agg = aggregate(traces, {20, 3});
  std::vector<ReportRow> a, b;
  for (const auto& row : agg.rows) (row.controller == "copy_a" ? a : b).push_back(row);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].scenario, b[i].scenario);
    EXPECT_EQ(a[i].segment, b[i].segment);
    EXPECT_EQ(a[i].episodes, b[i].episodes);
    EXPECT_EQ(a[i].mean_median_nfm, b[i].mean_median_nfm);
    EXPECT_EQ(a[i].mean_min_nfm, b[i].mean_min_nfm);
    EXPECT_EQ(a[i].segment_failures, b[i].segment_failures);
  }
}

TEST(Aggregate, PermutationInvariantAndRecomputableFromCsv) {
  const ComparisonReport r = compare_controllers(small_experiment());
  std::vector<EpisodeTrace> shuffled = r.traces;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[0], shuffled[3]);
  std::vector<EpisodeTrace> reread;
  for (const auto& t : shuffled) {
    std::stringstream io;
    write_trace_csv(io, t);
    reread.push_back(read_trace_csv(io));
  }
  const std::string expected = report_to_json(r, {20, 3});
  EXPECT_EQ(report_to_json(aggregate(shuffled, {20, 3}), {20, 3}), expected);
  EXPECT_EQ(report_to_json(aggregate(reread, {20, 3}), {20, 3}), expected);
}

TEST(Aggregate, MeansOverEpisodes) {
  const std::vector<EpisodeTrace> traces = {trace_from_nfm({kUndefinedNfm, 10, 30, 50}, "c", 0),
                                            trace_from_nfm({kUndefinedNfm, 100, 200}, "c", 1)};
  const ComparisonReport r = aggregate(traces, {20, 3});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].episodes, 2);
  EXPECT_DOUBLE_EQ(r.rows[0].mean_median_nfm, (30.0 + 150.0) / 2);
  EXPECT_DOUBLE_EQ(r.rows[0].mean_min_nfm, (10.0 + 100.0) / 2);
  ASSERT_EQ(r.tracking.size(), 1u);
  EXPECT_EQ(r.tracking[0].successes, 2);
}
