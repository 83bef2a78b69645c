#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "camctl/camera.hpp"
#include "camctl/features.hpp"
#include "camctl/sampler.hpp"

namespace camctl {

enum class LabelMetric { feat, match, hybrid };

std::string to_string(LabelMetric metric);
LabelMetric parse_label_metric(const std::string& text);

inline constexpr int kLabelHorizon = 4;  // future steps scanned per label
inline constexpr int kNumCameras = 2;

/// Candidate (future offset, camera) chosen by the feature-count criterion.
struct FeatChoice {
  int offset = 1;  // a in 1..4
  int camera = 1;  // i in {1, 2}
};

/// Candidate pair (I^i_{t+b}, I^j_{t+b+1}) chosen by the match criterion.
struct MatchChoice {
  int offset = 0;  // b in 0..3
  int camera_from = 1;
  int camera_to = 1;
};

/// Scores for one labelling window. feat[a-1][i-1] is m_feat of I^i_{t+a};
/// match[b][i-1][j-1] is m_match of (I^i_{t+b}, I^j_{t+b+1}).
struct WindowScores {
  std::array<std::array<int, kNumCameras>, kLabelHorizon> feat{};
  std::array<std::array<std::array<int, kNumCameras>, kNumCameras>, kLabelHorizon> match{};
};

/// Argmax with ties to the smallest offset, then camera 1.
FeatChoice select_feat(const WindowScores& scores);
/// Argmax with ties to the smallest offset, then (i, j) lexicographic.
MatchChoice select_match(const WindowScores& scores);

/// Per-frame feature counts and per-step pair matches for a whole dataset,
/// computed once so overlapping windows share detections.
class MetricTable {
 public:
  MetricTable(const CollectedDataset& dataset, const FeatureExtractor& extractor, const MatcherConfig& matcher);

  std::size_t size() const noexcept { return feat_.size(); }
  int feat(std::size_t t, int camera) const { return feat_.at(t)[camera - 1]; }
  /// Inliers between I^i_t and I^j_{t+1}.
  int match(std::size_t t, int camera_from, int camera_to) const {
    return match_.at(t)[camera_from - 1][camera_to - 1];
  }
  /// Scores of the window starting at t; requires t + 4 < size().
  WindowScores window(std::size_t t) const;

 private:
  std::vector<std::array<int, kNumCameras>> feat_;
  std::vector<std::array<std::array<int, kNumCameras>, kNumCameras>> match_;
};

/// True when timesteps t+1 .. t+4 exist.
bool has_future_window(const CollectedDataset& dataset, std::size_t t);

/// Params of the image with the most features in the window after t.
std::optional<CameraParams> label_feat(const CollectedDataset& dataset, const MetricTable& table, std::size_t t);
/// Params of the second image of the pair with the most inlier matches.
std::optional<CameraParams> label_match(const CollectedDataset& dataset, const MetricTable& table, std::size_t t);
/// w * feat + (1 - w) * match in normalized units; w = 1 and w = 0 return
/// the endpoints exactly.
NormalizedParams blend_labels(const CameraParams& feat, const CameraParams& match, double weight);

/// blend_labels of the feature-count and match labels for the window after t.
std::optional<NormalizedParams> label_hybrid(const CollectedDataset& dataset, const MetricTable& table,
                                             std::size_t t, double weight);

/// Normalized target under the chosen metric.
std::optional<NormalizedParams> label_target(const CollectedDataset& dataset, const MetricTable& table,
                                             std::size_t t, LabelMetric metric, double weight);

struct FrameRef {
  std::size_t time_index = 0;
  int camera_id = 1;
  bool operator==(const FrameRef&) const = default;
};

/// Three consecutive input frames (oldest first) and the target for the
/// command that follows the newest one.
struct LabeledSample {
  std::array<FrameRef, 3> frames{};
  std::array<CameraParams, 3> params{};
  NormalizedParams target;
  LabelMetric metric = LabelMetric::hybrid;
  double weight = 0.5;
  std::size_t episode = 0;
  std::size_t time_index = 0;
};

/// Eight samples (every camera choice at t-2, t-1, t) per labelable t in
/// [2, T-5]. Throws if the dataset has fewer than 7 timesteps.
std::vector<LabeledSample> build_training_set(const CollectedDataset& dataset, const MetricTable& table,
                                              LabelMetric metric, double weight, std::size_t episode = 0);

}  // namespace camctl
