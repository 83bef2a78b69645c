#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "camctl/camera.hpp"
#include "camctl/image.hpp"

namespace camctl {

using Descriptor = std::array<std::uint64_t, 4>;  // 256 bits
inline constexpr int kDescriptorBits = 256;

struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float score = 0.0f;
  Descriptor descriptor{};
};

struct DetectorConfig {
  double gradient_sigma = 2.0;      // pre-smoothing before Sobel
  double window_sigma = 1.5;        // structure-tensor window
  double min_eigen_threshold = 5e-5;
  int nms_radius = 7;
  int max_features = 500;
  double descriptor_sigma = 2.0;
  int patch_radius = 12;
  int border = 16;
  std::uint64_t pattern_seed = 0x5eed;

  void validate() const;
};

struct MatcherConfig {
  int max_hamming = 64;
  double pixel_tol = 2.0;
  int ransac_iterations = 256;
  std::uint64_t ransac_seed = 0xa11ce;

  void validate() const;
};

/// q = scale * R(rotation) * p + (tx, ty)
struct SimilarityModel {
  double tx = 0.0;
  double ty = 0.0;
  double rotation = 0.0;
  double scale = 1.0;
};

struct MatchPair {
  int index_a = 0;
  int index_b = 0;
  int distance = 0;
};

struct MatchSet {
  std::vector<MatchPair> pairs;
  std::vector<bool> inlier_mask;
  SimilarityModel model;

  int inlier_count() const;
};

/// Binary test pairs (dx1, dy1, dx2, dy2) inside the descriptor patch.
struct SamplingPattern {
  std::array<std::array<std::int8_t, 4>, kDescriptorBits> tests{};
};

SamplingPattern make_sampling_pattern(std::uint64_t seed, int patch_radius);

/// Corner detector + binary descriptor. One instance per run so every image
/// is described with the same sampling pattern.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(DetectorConfig config = {});

  const DetectorConfig& config() const noexcept { return config_; }

  /// Minimum-eigenvalue corner response map (zero outside the valid border).
  ImageF corner_response(const ImageF& image) const;

  std::vector<Keypoint> detect(const ImageF& image) const;
  std::vector<Keypoint> detect(const Frame& frame) const;

  /// Feature-count metric.
  int m_feat(const ImageF& image) const;
  int m_feat(const Frame& frame) const;

 private:
  DetectorConfig config_;
  SamplingPattern pattern_;
};

int hamming_distance(const Descriptor& a, const Descriptor& b) noexcept;

/// Mutual nearest neighbours under the Hamming ceiling; ties go to the
/// lower index.
std::vector<MatchPair> mutual_matches(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                                      int max_hamming);

/// Least-squares similarity on the given correspondences; nullopt when degenerate.
std::optional<SimilarityModel> fit_similarity(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                                              const std::vector<MatchPair>& pairs,
                                              const std::vector<int>& subset);

/// Matches keypoints, fits a similarity with seeded RANSAC and marks inliers.
MatchSet match_keypoints(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                         const MatcherConfig& config, Rng& rng);

/// detect + match_keypoints. The inlier count is the match metric.
MatchSet match_and_count_inliers(const FeatureExtractor& extractor, const ImageF& image_a,
                                 const ImageF& image_b, const MatcherConfig& config, Rng& rng);

/// Match metric with the RANSAC stream seeded from config.ransac_seed, so
/// the value is a pure function of the image pair.
int m_match(const FeatureExtractor& extractor, const ImageF& image_a, const ImageF& image_b,
            const MatcherConfig& config);

/// Same as m_match for already detected keypoints.
int m_match(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b, const MatcherConfig& config);

}  // namespace camctl
