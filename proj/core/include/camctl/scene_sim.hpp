#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "camctl/camera.hpp"
#include "camctl/image.hpp"

namespace camctl {

/// Viewport origin (pixels, field coordinates) and instantaneous velocity (px/s).
struct TrajectoryStep {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// HDR world: a periodic radiance field swept by a viewport along a
/// trajectory, under a per-step global illumination multiplier.
struct RadianceScene {
  ImageF radiance;  // tileable; indices wrap
  std::vector<TrajectoryStep> trajectory;
  std::vector<double> illumination;
  int viewport_width = 256;
  int viewport_height = 256;

  std::size_t length() const noexcept { return trajectory.size(); }
  void validate() const;
};

struct TunnelSceneConfig {
  double outdoor_level = 1.0;        // radiance multiplier outside the tunnel
  double attenuation_db = 60.0;      // 20*log10(outside / inside)
  double transition_frames = 16.0;   // 10%-90% width of each transition
  int lead_in_frames = 100;          // static outdoor before entry
  int tunnel_frames = 150;           // entry centre to exit centre
  int lead_out_frames = 150;         // after exit centre
  double texture_density = 4.0;      // shapes per 1500 px^2
  double shading_log_sigma = 0.8;    // std-dev of log shading
  int field_size = 1024;
  int viewport = 256;
  double speed_px_s = 150.0;
  double heading_rad = 0.35;
  double frame_rate_hz = 15.0;

  int total_frames() const noexcept { return lead_in_frames + tunnel_frames + lead_out_frames; }
  void validate() const;
};

/// Procedural tunnel scene; attenuation 0 dB gives constant lighting.
RadianceScene make_tunnel_scene(const TunnelSceneConfig& config, Rng& rng);

/// Tileable multi-scale texture of painted rectangles, ellipses, and blobs
/// (reflectance in [0.12, 1]) under log-normal low-frequency shading.
ImageF make_texture(int size, double density, Rng& rng, double shading_log_sigma = 0.8);

/// Steps 1-4 of image formation: crop, illumination, exposure/gain scaling,
/// motion blur. Returns the linear signal x (not clipped).
ImageF exposure_signal(const RadianceScene& scene, std::size_t t, const CameraParams& params,
                       const CameraModel& model);

/// Step 5: zero-mean Gaussian read + shot noise, both amplified by gain.
void add_sensor_noise(ImageF& signal, const CameraParams& params, const CameraModel& model, Rng& rng);

/// Step 6: y = clip(x, 0, 1)^(1 / crf_gamma).
ImageF apply_response(const ImageF& signal, const CameraModel& model);

/// Step 7: round(y * max_code).
ImageU16 quantize(const ImageF& response, int bits);

/// Full render: steps 1-7. Throws InvalidArgument for t out of range or
/// non-finite params.
Frame render_frame(const RadianceScene& scene, std::size_t t, const CameraParams& params,
                   const CameraModel& model, Rng& rng, int camera_id = 1);

/// Params that put the noise-free mean signal at `target_mean_signal`,
/// using the exposure-priority schedule. Used to seed every controller
/// with the same well-metered starting point.
CameraParams metered_params(const RadianceScene& scene, std::size_t t, const CameraModel& model,
                            double target_pixel_mean = 0.45);

/// True where |log(illum[t+1] / illum[t])| exceeds `tolerance`.
std::vector<bool> transition_frames(const RadianceScene& scene, double tolerance = 0.01);

}  // namespace camctl

namespace camctl {

/// Content hash of the scene (field, trajectory, illumination, viewport).
std::uint64_t scene_fingerprint(const RadianceScene& scene);

}  // namespace camctl
