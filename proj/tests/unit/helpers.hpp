#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "camctl/scene_sim.hpp"

namespace camctl::test {

/// Small, fast tunnel scene for unit tests.
inline TunnelSceneConfig small_scene_config() {
  TunnelSceneConfig c;
  c.field_size = 384;
  c.viewport = 96;
  c.lead_in_frames = 12;
  c.tunnel_frames = 16;
  c.lead_out_frames = 12;
  c.transition_frames = 4;
  return c;
}

inline RadianceScene small_scene(std::uint64_t seed, double attenuation_db = 60.0) {
  TunnelSceneConfig c = small_scene_config();
  c.attenuation_db = attenuation_db;
  Rng rng(seed);
  return make_tunnel_scene(c, rng);
}

inline CameraModel noiseless_model(bool blur = false) {
  CameraModel m;
  m.read_noise_sigma = 0.0;
  m.shot_noise_scale = 0.0;
  m.blur_enabled = blur;
  return m;
}

/// Scene with one constant radiance value everywhere.
inline RadianceScene uniform_scene(float radiance, int size = 64, std::size_t frames = 3) {
  RadianceScene s;
  s.radiance = ImageF(size * 2, size * 2, radiance);
  s.viewport_width = size;
  s.viewport_height = size;
  s.trajectory.assign(frames, TrajectoryStep{0.0, 0.0, 30.0, 0.0});
  s.illumination.assign(frames, 1.0);
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("camctl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace camctl::test
