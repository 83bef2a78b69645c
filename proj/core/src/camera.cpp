#include "camctl/camera.hpp"

#include <algorithm>
#include <cmath>

namespace camctl {

CameraParams::CameraParams(double gain_db, double exposure_s)
    : gain_db_(std::isfinite(gain_db) ? std::clamp(gain_db, kMinGainDb, kMaxGainDb) : gain_db),
      exposure_s_(std::isfinite(exposure_s) ? std::clamp(exposure_s, kMinExposureS, kMaxExposureS)
                                            : exposure_s) {}

bool CameraParams::is_finite() const noexcept {
  return std::isfinite(gain_db_) && std::isfinite(exposure_s_);
}

double CameraParams::exposure_gain_product() const {
  return exposure_s_ * gain_db_to_linear(gain_db_);
}

double gain_db_to_linear(double gain_db) { return std::pow(10.0, gain_db / 20.0); }

double gain_linear_to_db(double gain_linear) { return 20.0 * std::log10(gain_linear); }

NormalizedParams normalize(const CameraParams& p) {
  return {(p.gain_db() - kMinGainDb) / (kMaxGainDb - kMinGainDb),
          (p.exposure_s() - kMinExposureS) / (kMaxExposureS - kMinExposureS)};
}

CameraParams denormalize(const NormalizedParams& n) {
  const double g = std::clamp(n.gain, 0.0, 1.0);
  const double e = std::clamp(n.exposure, 0.0, 1.0);
  return {kMinGainDb + g * (kMaxGainDb - kMinGainDb),
          kMinExposureS + e * (kMaxExposureS - kMinExposureS)};
}

void CameraModel::validate() const {
  if (!(crf_gamma > 0.0) || !std::isfinite(crf_gamma)) throw InvalidArgument("crf_gamma must be > 0");
  if (!(read_noise_sigma >= 0.0) || !(shot_noise_scale >= 0.0)) {
    throw InvalidArgument("noise parameters must be >= 0");
  }
  if (!(full_well_scale > 0.0)) throw InvalidArgument("full_well_scale must be > 0");
  if (quantization_bits < 1 || quantization_bits > 16) {
    throw InvalidArgument("quantization_bits must be in [1, 16]");
  }
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL)));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace camctl

namespace camctl {

CameraParams params_from_product(double exposure_gain_product) {
  const double e = std::clamp(exposure_gain_product, kMinExposureS, kMaxExposureS);
  const double g_lin = std::max(1.0, exposure_gain_product / e);
  return {gain_linear_to_db(g_lin), e};
}

}  // namespace camctl
