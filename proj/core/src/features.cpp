#include "camctl/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace camctl {

namespace {

using Complex = std::complex<double>;

Complex point(const Keypoint& k) { return {k.x, k.y}; }

SimilarityModel to_model(Complex a, Complex t) {
  return {t.real(), t.imag(), std::arg(a), std::abs(a)};
}

Complex model_a(const SimilarityModel& m) { return std::polar(m.scale, m.rotation); }

int count_inliers(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                  const std::vector<MatchPair>& pairs, Complex sa, Complex st, double tol,
                  std::vector<bool>* mask) {
  const double tol2 = tol * tol;
  int n = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Complex pred = sa * point(a[pairs[i].index_a]) + st;
    const bool in = std::norm(pred - point(b[pairs[i].index_b])) <= tol2;
    if (mask) (*mask)[i] = in;
    n += in ? 1 : 0;
  }
  return n;
}

}  // namespace

void DetectorConfig::validate() const {
  if (nms_radius < 0) throw InvalidArgument("nms_radius must be >= 0");
  if (max_features <= 0) throw InvalidArgument("max_features must be > 0");
  if (patch_radius <= 0 || patch_radius > 127) throw InvalidArgument("patch_radius must be in [1, 127]");
  if (border < patch_radius) throw InvalidArgument("border must be >= patch_radius");
  if (!(min_eigen_threshold >= 0.0)) throw InvalidArgument("min_eigen_threshold must be >= 0");
}

void MatcherConfig::validate() const {
  if (max_hamming < 0 || max_hamming > kDescriptorBits) throw InvalidArgument("max_hamming out of range");
  if (!(pixel_tol > 0.0)) throw InvalidArgument("pixel_tol must be > 0");
  if (ransac_iterations <= 0) throw InvalidArgument("ransac_iterations must be > 0");
}

int MatchSet::inlier_count() const {
  return static_cast<int>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

SamplingPattern make_sampling_pattern(std::uint64_t seed, int patch_radius) {
  SamplingPattern pattern;
  Rng rng(mix_seed(seed));
  std::normal_distribution<double> normal(0.0, patch_radius / 2.0);
  auto draw = [&]() {
    return static_cast<std::int8_t>(std::clamp<long>(std::lround(normal(rng)), -patch_radius, patch_radius));
  };
  for (auto& test : pattern.tests) {
    do {
      test = {draw(), draw(), draw(), draw()};
    } while (test[0] == test[2] && test[1] == test[3]);
  }
  return pattern;
}

FeatureExtractor::FeatureExtractor(DetectorConfig config)
    : config_(config), pattern_(make_sampling_pattern(config.pattern_seed, config.patch_radius)) {
  config_.validate();
}

ImageF FeatureExtractor::corner_response(const ImageF& image) const {
  const int w = image.width();
  const int h = image.height();
  ImageF response(w, h, 0.0f);
  if (w <= 2 * config_.border || h <= 2 * config_.border) return response;

  const ImageF smooth = gaussian_blur(image, config_.gradient_sigma);
  ImageF ixx(w, h), iyy(w, h), ixy(w, h);
  for (int y = 0; y < h; ++y) {
    const float* up = smooth.row(std::max(0, y - 1));
    const float* mid = smooth.row(y);
    const float* dn = smooth.row(std::min(h - 1, y + 1));
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(0, x - 1);
      const int xr = std::min(w - 1, x + 1);
      const float gx = ((up[xr] - up[xl]) + 2.0f * (mid[xr] - mid[xl]) + (dn[xr] - dn[xl])) * 0.125f;
      const float gy = ((dn[xl] - up[xl]) + 2.0f * (dn[x] - up[x]) + (dn[xr] - up[xr])) * 0.125f;
      ixx(x, y) = gx * gx;
      iyy(x, y) = gy * gy;
      ixy(x, y) = gx * gy;
    }
  }
  const ImageF sxx = gaussian_blur(ixx, config_.window_sigma);
  const ImageF syy = gaussian_blur(iyy, config_.window_sigma);
  const ImageF sxy = gaussian_blur(ixy, config_.window_sigma);

  const int b = config_.border;
  for (int y = b; y < h - b; ++y) {
    for (int x = b; x < w - b; ++x) {
      const float a = sxx(x, y);
      const float c = syy(x, y);
      const float d = sxy(x, y);
      const float half_diff = 0.5f * (a - c);
      const float lmin = 0.5f * (a + c) - std::sqrt(half_diff * half_diff + d * d);
      response(x, y) = std::max(0.0f, lmin);
    }
  }
  return response;
}

std::vector<Keypoint> FeatureExtractor::detect(const ImageF& image) const {
  std::vector<Keypoint> out;
  if (image.empty()) return out;
  const ImageF response = corner_response(image);
  const int w = image.width();
  const int h = image.height();
  const int r = config_.nms_radius;
  const float thr = static_cast<float>(config_.min_eigen_threshold);

  struct Candidate {
    float score;
    int index;
  };
  std::vector<Candidate> kept;
  for (int y = config_.border; y < h - config_.border; ++y) {
    for (int x = config_.border; x < w - config_.border; ++x) {
      const float s = response(x, y);
      if (!(s > thr)) continue;
      const int idx = y * w + x;
      bool is_max = true;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r) && is_max; ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          const float o = response(xx, yy);
          // Plateaus resolve to the lowest linear index.
          if (o > s || (o == s && yy * w + xx < idx)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) kept.push_back({s, idx});
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  });
  if (static_cast<int>(kept.size()) > config_.max_features) kept.resize(config_.max_features);

  const ImageF smooth = gaussian_blur(image, config_.descriptor_sigma);
  out.reserve(kept.size());
  for (const auto& c : kept) {
    Keypoint k;
    const int x = c.index % w;
    const int y = c.index / w;
    k.x = static_cast<float>(x);
    k.y = static_cast<float>(y);
    k.score = c.score;
    for (int bit = 0; bit < kDescriptorBits; ++bit) {
      const auto& t = pattern_.tests[bit];
      if (smooth(x + t[0], y + t[1]) < smooth(x + t[2], y + t[3])) {
        k.descriptor[bit / 64] |= std::uint64_t{1} << (bit % 64);
      }
    }
    out.push_back(k);
  }
  return out;
}

std::vector<Keypoint> FeatureExtractor::detect(const Frame& frame) const {
  return detect(to_unit_float(frame.image, frame.max_code));
}

int FeatureExtractor::m_feat(const ImageF& image) const { return static_cast<int>(detect(image).size()); }

int FeatureExtractor::m_feat(const Frame& frame) const { return static_cast<int>(detect(frame).size()); }

int hamming_distance(const Descriptor& a, const Descriptor& b) noexcept {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(a[i] ^ b[i]);
  return d;
}

std::vector<MatchPair> mutual_matches(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                                      int max_hamming) {
  std::vector<MatchPair> pairs;
  if (a.empty() || b.empty()) return pairs;
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  std::vector<int> best_ab(na, -1), dist_ab(na, std::numeric_limits<int>::max());
  std::vector<int> best_ba(nb, -1), dist_ba(nb, std::numeric_limits<int>::max());
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      const int d = hamming_distance(a[i].descriptor, b[j].descriptor);
      if (d < dist_ab[i]) {
        dist_ab[i] = d;
        best_ab[i] = j;
      }
      if (d < dist_ba[j]) {
        dist_ba[j] = d;
        best_ba[j] = i;
      }
    }
  }
  for (int i = 0; i < na; ++i) {
    const int j = best_ab[i];
    if (j >= 0 && best_ba[j] == i && dist_ab[i] <= max_hamming) pairs.push_back({i, j, dist_ab[i]});
  }
  return pairs;
}

std::optional<SimilarityModel> fit_similarity(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                                              const std::vector<MatchPair>& pairs,
                                              const std::vector<int>& subset) {
  if (subset.size() < 2) return std::nullopt;
  Complex pm{}, qm{};
  for (int i : subset) {
    pm += point(a[pairs[i].index_a]);
    qm += point(b[pairs[i].index_b]);
  }
  pm /= static_cast<double>(subset.size());
  qm /= static_cast<double>(subset.size());
  Complex num{};
  double den = 0.0;
  for (int i : subset) {
    const Complex p = point(a[pairs[i].index_a]) - pm;
    const Complex q = point(b[pairs[i].index_b]) - qm;
    num += std::conj(p) * q;
    den += std::norm(p);
  }
  if (den < 1e-9) return std::nullopt;
  const Complex sa = num / den;
  return to_model(sa, qm - sa * pm);
}

MatchSet match_keypoints(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                         const MatcherConfig& config, Rng& rng) {
  MatchSet result;
  result.pairs = mutual_matches(a, b, config.max_hamming);
  result.inlier_mask.assign(result.pairs.size(), false);
  const int n = static_cast<int>(result.pairs.size());
  if (n < 2) return result;

  int best_count = -1;
  SimilarityModel best;
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int it = 0; it < config.ransac_iterations; ++it) {
    const int i = pick(rng);
    int j = pick(rng);
    if (i == j) j = (j + 1) % n;
    const auto model = fit_similarity(a, b, result.pairs, {i, j});
    if (!model) continue;
    const int count = count_inliers(a, b, result.pairs, model_a(*model), {model->tx, model->ty},
                                    config.pixel_tol, nullptr);
    if (count > best_count) {
      best_count = count;
      best = *model;
    }
  }
  if (best_count < 0) return result;

  std::vector<bool> mask(n, false);
  count_inliers(a, b, result.pairs, model_a(best), {best.tx, best.ty}, config.pixel_tol, &mask);
  std::vector<int> subset;
  for (int i = 0; i < n; ++i) {
    if (mask[i]) subset.push_back(i);
  }
  if (const auto refined = fit_similarity(a, b, result.pairs, subset)) {
    std::vector<bool> refined_mask(n, false);
    const int count = count_inliers(a, b, result.pairs, model_a(*refined), {refined->tx, refined->ty},
                                    config.pixel_tol, &refined_mask);
    if (count >= best_count) {
      best = *refined;
      mask = std::move(refined_mask);
    }
  }
  result.model = best;
  result.inlier_mask = std::move(mask);
  return result;
}

MatchSet match_and_count_inliers(const FeatureExtractor& extractor, const ImageF& image_a,
                                 const ImageF& image_b, const MatcherConfig& config, Rng& rng) {
  return match_keypoints(extractor.detect(image_a), extractor.detect(image_b), config, rng);
}

int m_match(const FeatureExtractor& extractor, const ImageF& image_a, const ImageF& image_b,
            const MatcherConfig& config) {
  Rng rng(mix_seed(config.ransac_seed));
  return match_and_count_inliers(extractor, image_a, image_b, config, rng).inlier_count();
}

int m_match(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b, const MatcherConfig& config) {
  Rng rng(mix_seed(config.ransac_seed));
  return match_keypoints(a, b, config, rng).inlier_count();
}

}  // namespace camctl
