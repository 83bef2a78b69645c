#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "camctl/config.hpp"
#include "camctl/controllers.hpp"
#include "camctl/features.hpp"
#include "camctl/scene_sim.hpp"

namespace camctl {

enum class SegmentTag { static_lighting, dynamic_lighting };

std::string to_string(SegmentTag tag);
SegmentTag parse_segment_tag(const std::string& text);

inline constexpr int kUndefinedNfm = -1;

struct TraceRow {
  std::size_t time_index = 0;
  CameraParams params;
  int m_feat = 0;
  int nfm = kUndefinedNfm;  // inliers against the previous frame
  double mean_intensity = 0.0;
  SegmentTag segment = SegmentTag::static_lighting;

  bool operator==(const TraceRow&) const = default;
};

struct EpisodeTrace {
  std::string controller;
  std::string scenario;  // "tunnel" or "constant"
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;

  bool operator==(const EpisodeTrace&) const = default;
};

struct FailureCriterion {
  int min_matches = 20;
  int run_length = 3;
};

struct SegmentStats {
  SegmentTag tag = SegmentTag::static_lighting;
  double median_nfm = 0.0;
  int min_nfm = 0;
  int frames = 0;  // frames with defined NFM
  bool tracking_failed = false;
  bool empty = true;
};

/// Frames within `margin` of an illumination transition are dynamic.
std::vector<SegmentTag> segment_tags(const RadianceScene& scene, int margin, double tolerance = 0.01);

/// True when `values` holds at least `run_length` consecutive entries below
/// `min_matches`. Undefined entries break runs.
bool has_failure_run(std::span<const int> values, const FailureCriterion& criterion);

double median(std::vector<int> values);

struct EpisodeSetup {
  const RadianceScene* scene = nullptr;
  CameraModel model;
  const FeatureExtractor* extractor = nullptr;
  MatcherConfig matcher;
  std::uint64_t seed = 0;  // camera noise stream
  CameraParams initial;
  int dynamic_margin = 15;
  double transition_tolerance = 0.01;
};

/// Closed-loop single-camera episode.
EpisodeTrace run_episode(Controller& controller, const EpisodeSetup& setup);

/// Stats for each segment tag present in the trace (static first).
std::vector<SegmentStats> segment_stats(const EpisodeTrace& trace, const FailureCriterion& criterion);

/// Failure anywhere in the episode.
bool episode_failed(const EpisodeTrace& trace, const FailureCriterion& criterion);

/// Builds a controller by identity ("fixed", "reactive_ae_ag",
/// "gradient_metric", "learned"). "learned" needs a predictor.
std::unique_ptr<Controller> make_controller(const std::string& identity, const ExperimentConfig& config,
                                            std::shared_ptr<const Predictor> predictor = nullptr);

struct ReportRow {
  std::string scenario;
  std::string controller;
  SegmentTag segment = SegmentTag::static_lighting;
  int episodes = 0;            // episodes with a non-empty segment
  double mean_median_nfm = 0.0;
  double mean_min_nfm = 0.0;
  int segment_failures = 0;
};

struct TrackingRow {
  std::string scenario;
  std::string controller;
  int successes = 0;
  int episodes = 0;
};

struct ComparisonReport {
  std::vector<EpisodeTrace> traces;
  std::vector<ReportRow> rows;
  std::vector<TrackingRow> tracking;
};

/// Scenes for the benchmark: tunnel episodes then constant-lighting ones.
struct BenchmarkEpisode {
  std::string scenario;
  std::size_t index = 0;
  std::uint64_t noise_seed = 0;
  RadianceScene scene;
};
std::vector<BenchmarkEpisode> benchmark_episodes(const ExperimentConfig& config);

/// Recomputes rows and tracking counts from traces alone. Results do not
/// depend on trace order.
ComparisonReport aggregate(std::vector<EpisodeTrace> traces, const FailureCriterion& criterion);

/// Runs every configured controller on every benchmark episode with shared
/// scenes and noise streams. `predictor` is required when "learned" is listed.
ComparisonReport compare_controllers(const ExperimentConfig& config,
                                     std::shared_ptr<const Predictor> predictor = nullptr, bool verbose = false);

std::string format_report(const ComparisonReport& report);
std::string report_to_json(const ComparisonReport& report, const FailureCriterion& criterion);

}  // namespace camctl
