#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "camctl/image.hpp"

namespace camctl {

inline constexpr double kMinGainDb = 0.0;
inline constexpr double kMaxGainDb = 30.0;
inline constexpr double kMinExposureS = 75e-6;
inline constexpr double kMaxExposureS = 30e-3;

/// Thrown for violated preconditions on user-supplied values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Gain/exposure in [0,1]^2 (linear rescale of the legal ranges).
struct NormalizedParams {
  double gain = 0.0;
  double exposure = 0.0;
  bool operator==(const NormalizedParams&) const = default;
};

/// A (gain dB, exposure seconds) command. Finite values are clamped to the
/// legal ranges on construction; non-finite values are kept so callers can
/// detect them with is_finite().
class CameraParams {
 public:
  CameraParams() = default;
  CameraParams(double gain_db, double exposure_s);

  double gain_db() const noexcept { return gain_db_; }
  double exposure_s() const noexcept { return exposure_s_; }
  bool is_finite() const noexcept;

  /// exposure_s * linear gain; the brightness the sensor sees per unit radiance.
  double exposure_gain_product() const;

  bool operator==(const CameraParams&) const = default;

 private:
  double gain_db_ = kMinGainDb;
  double exposure_s_ = kMinExposureS;
};

double gain_db_to_linear(double gain_db);
double gain_linear_to_db(double gain_linear);

NormalizedParams normalize(const CameraParams& p);
/// Clamps each component to [0,1] before inverting the rescale.
CameraParams denormalize(const NormalizedParams& n);

/// Single-channel sensor model: gamma response, gain-amplified Gaussian
/// read + shot noise, optional motion blur, uniform quantization.
struct CameraModel {
  double crf_gamma = 2.2;
  double read_noise_sigma = 0.0005;
  double shot_noise_scale = 0.0015;
  double full_well_scale = 0.001;
  bool blur_enabled = true;
  int quantization_bits = 8;

  int max_code() const noexcept { return (1 << quantization_bits) - 1; }
  void validate() const;
};

/// Quantized image plus the acquisition metadata.
struct Frame {
  ImageU16 image;
  CameraParams params;
  int camera_id = 1;
  std::int64_t time_index = 0;
  int max_code = 255;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Deterministic stream for (seed, a, b), e.g. (episode seed, camera, time).
Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Rng& rng);

}  // namespace camctl

namespace camctl {

/// Splits a target exposure*gain product with exposure priority: exposure
/// takes as much as its range allows, the remainder goes to gain.
CameraParams params_from_product(double exposure_gain_product);

}  // namespace camctl
