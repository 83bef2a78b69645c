#include "camctl/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace camctl {

namespace {

int wrap(int v, int n) noexcept {
  const int r = v % n;
  return r < 0 ? r + n : r;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return lo * std::exp(uniform01(rng) * std::log(hi / lo));
}

void wrap_blur(ImageF& img, double sigma) {
  const int n = img.width();
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * r + 1);
  float sum = 0.0f;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5f * i * i / static_cast<float>(sigma * sigma));
  for (auto& v : k) v /= sum;

  ImageF tmp(n, img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < n; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img(wrap(x + i, n), y);
      tmp(x, y) = acc;
    }
  }
  const int h = img.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < n; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(x, wrap(y + i, h));
      img(x, y) = acc;
    }
  }
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void RadianceScene::validate() const {
  if (radiance.empty()) throw InvalidArgument("scene radiance field is empty");
  if (trajectory.empty()) throw InvalidArgument("scene trajectory is empty");
  if (illumination.size() != trajectory.size()) {
    throw InvalidArgument("illumination profile length must equal trajectory length");
  }
  for (double v : illumination) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("illumination must be > 0");
  }
  for (float v : radiance.pixels()) {
    if (!(v >= 0.0f)) throw InvalidArgument("radiance must be >= 0");
  }
  if (viewport_width <= 0 || viewport_height <= 0 || viewport_width > radiance.width() ||
      viewport_height > radiance.height()) {
    throw InvalidArgument("viewport must fit inside the radiance field");
  }
}

void TunnelSceneConfig::validate() const {
  if (!(attenuation_db >= 0.0)) throw InvalidArgument("attenuation_db must be >= 0");
  if (lead_in_frames <= 0 || tunnel_frames <= 0 || lead_out_frames <= 0) {
    throw InvalidArgument("tunnel scene segments must be non-empty");
  }
  if (!(outdoor_level > 0.0)) throw InvalidArgument("outdoor_level must be > 0");
  if (!(transition_frames > 0.0)) throw InvalidArgument("transition_frames must be > 0");
  if (viewport <= 0 || field_size < viewport) throw InvalidArgument("field_size must be >= viewport");
  if (!(frame_rate_hz > 0.0)) throw InvalidArgument("frame_rate_hz must be > 0");
  if (!(texture_density > 0.0)) throw InvalidArgument("texture_density must be > 0");
  if (!(shading_log_sigma >= 0.0)) throw InvalidArgument("shading_log_sigma must be >= 0");
}

ImageF make_texture(int size, double density, Rng& rng, double shading_log_sigma) {
  ImageF field(size, size, 0.15f);
  const int shapes = std::max(1, static_cast<int>(density * size * size / 1500.0));

  struct Shape {
    double cx, cy, half_w, half_h, angle;
    float value;
    int kind;  // 0 rect, 1 ellipse, 2 soft blob
  };
  std::vector<Shape> list;
  list.reserve(shapes);
  for (int i = 0; i < shapes; ++i) {
    Shape s{};
    s.cx = uniform01(rng) * size;
    s.cy = uniform01(rng) * size;
    s.half_w = 0.5 * log_uniform(rng, 4.0, 80.0);
    s.half_h = s.half_w * log_uniform(rng, 0.35, 2.8);
    s.angle = uniform01(rng) < 0.5 ? 0.0 : uniform01(rng) * std::numbers::pi;
    s.value = static_cast<float>(log_uniform(rng, 0.12, 1.0));
    const double k = uniform01(rng);
    s.kind = k < 0.6 ? 0 : (k < 0.9 ? 1 : 2);
    list.push_back(s);
  }
  // Painter's order: large shapes first so small detail stays visible.
  std::stable_sort(list.begin(), list.end(), [](const Shape& a, const Shape& b) {
    return a.half_w * a.half_h > b.half_w * b.half_h;
  });

  for (const auto& s : list) {
    const double c = std::cos(s.angle);
    const double sn = std::sin(s.angle);
    const double reach = std::hypot(s.half_w, s.half_h) + 1.0;
    const int x0 = static_cast<int>(std::floor(s.cx - reach));
    const int x1 = static_cast<int>(std::ceil(s.cx + reach));
    const int y0 = static_cast<int>(std::floor(s.cy - reach));
    const int y1 = static_cast<int>(std::ceil(s.cy + reach));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - s.cx;
        const double dy = y + 0.5 - s.cy;
        const double u = (c * dx + sn * dy) / s.half_w;
        const double v = (-sn * dx + c * dy) / s.half_h;
        float& dst = field(wrap(x, size), wrap(y, size));
        if (s.kind == 0) {
          if (std::abs(u) <= 1.0 && std::abs(v) <= 1.0) dst = s.value;
        } else if (s.kind == 1) {
          if (u * u + v * v <= 1.0) dst = s.value;
        } else {
          const double r2 = u * u + v * v;
          if (r2 <= 1.0) {
            const float a = static_cast<float>(std::exp(-3.0 * r2));
            dst = a * s.value + (1.0f - a) * dst;
          }
        }
      }
    }
  }
  wrap_blur(field, 0.7);

  // Low-frequency shading (shadows / sunlit patches), log-normal, tileable.
  const int grid = 8;
  const int cell = std::max(1, size / grid);
  std::normal_distribution<double> normal(0.0, 1.0);
  ImageF coarse(grid, grid);
  for (auto& v : coarse.pixels()) v = static_cast<float>(normal(rng));
  for (int y = 0; y < size; ++y) {
    const double gy = static_cast<double>(y) / cell;
    const int y0 = static_cast<int>(std::floor(gy));
    const double fy = gy - y0;
    for (int x = 0; x < size; ++x) {
      const double gx = static_cast<double>(x) / cell;
      const int x0 = static_cast<int>(std::floor(gx));
      const double fx = gx - x0;
      // Smoothstep-weighted bilinear interpolation on the wrapped grid.
      const double sx = fx * fx * (3.0 - 2.0 * fx);
      const double sy = fy * fy * (3.0 - 2.0 * fy);
      const double a = coarse(wrap(x0, grid), wrap(y0, grid));
      const double b = coarse(wrap(x0 + 1, grid), wrap(y0, grid));
      const double c = coarse(wrap(x0, grid), wrap(y0 + 1, grid));
      const double d = coarse(wrap(x0 + 1, grid), wrap(y0 + 1, grid));
      const double z = (a * (1 - sx) + b * sx) * (1 - sy) + (c * (1 - sx) + d * sx) * sy;
      field(x, y) = static_cast<float>(field(x, y) * std::exp(shading_log_sigma * z));
    }
  }
  return field;
}

RadianceScene make_tunnel_scene(const TunnelSceneConfig& config, Rng& rng) {
  config.validate();
  RadianceScene scene;
  scene.viewport_width = config.viewport;
  scene.viewport_height = config.viewport;
  scene.radiance = make_texture(config.field_size, config.texture_density, rng, config.shading_log_sigma);
  for (auto& v : scene.radiance.pixels()) v = static_cast<float>(v * config.outdoor_level);

  const int n = config.total_frames();
  const double vx = config.speed_px_s * std::cos(config.heading_rad);
  const double vy = config.speed_px_s * std::sin(config.heading_rad);
  const double dt = 1.0 / config.frame_rate_hz;
  const double x0 = uniform01(rng) * config.field_size;
  const double y0 = uniform01(rng) * config.field_size;

  // Logistic in log-radiance; 10%-90% of the change spans transition_frames.
  const double scale = config.transition_frames / (2.0 * std::log(9.0));
  const double log_drop = config.attenuation_db / 20.0 * std::numbers::ln10;
  const double entry = config.lead_in_frames;
  const double exit = entry + config.tunnel_frames;

  scene.trajectory.reserve(n);
  scene.illumination.reserve(n);
  for (int t = 0; t < n; ++t) {
    TrajectoryStep step;
    step.x = std::fmod(x0 + vx * t * dt, static_cast<double>(config.field_size));
    step.y = std::fmod(y0 + vy * t * dt, static_cast<double>(config.field_size));
    step.vx = vx;
    step.vy = vy;
    scene.trajectory.push_back(step);
    const double inside = logistic((t - entry) / scale) - logistic((t - exit) / scale);
    scene.illumination.push_back(config.attenuation_db == 0.0 ? 1.0 : std::exp(-log_drop * inside));
  }
  return scene;
}

ImageF exposure_signal(const RadianceScene& scene, std::size_t t, const CameraParams& params,
                       const CameraModel& model) {
  if (t >= scene.length()) throw InvalidArgument("time index out of range");
  if (!params.is_finite()) throw InvalidArgument("camera params must be finite");

  const auto& step = scene.trajectory[t];
  const int fw = scene.radiance.width();
  const int fh = scene.radiance.height();
  const int ox = static_cast<int>(std::lround(step.x));
  const int oy = static_cast<int>(std::lround(step.y));
  const double scale = scene.illumination[t] * params.exposure_s() * gain_db_to_linear(params.gain_db()) /
                       model.full_well_scale;

  // Box kernel along the motion direction. The pixel integrates radiance
  // along a path of length |v| * exposure; the last tap is fractional.
  struct Tap {
    int dx, dy;
    double w;
  };
  std::vector<Tap> taps;
  const double speed = std::hypot(step.vx, step.vy);
  const double length = model.blur_enabled ? speed * params.exposure_s() : 0.0;
  if (length <= 1.0) {
    taps.push_back({0, 0, 1.0});
  } else {
    const double ux = step.vx / speed;
    const double uy = step.vy / speed;
    const int full = static_cast<int>(std::floor(length));
    const double frac = length - full;
    for (int k = 0; k <= full; ++k) {
      const double w = k < full ? 1.0 : frac;
      if (w <= 0.0) break;
      taps.push_back({static_cast<int>(std::lround(k * ux)), static_cast<int>(std::lround(k * uy)), w / length});
    }
  }

  ImageF out(scene.viewport_width, scene.viewport_height);
  for (int y = 0; y < out.height(); ++y) {
    float* dst = out.row(y);
    for (int x = 0; x < out.width(); ++x) {
      double acc = 0.0;
      for (const auto& tap : taps) {
        acc += tap.w * scene.radiance(wrap(ox + x + tap.dx, fw), wrap(oy + y + tap.dy, fh));
      }
      dst[x] = static_cast<float>(acc * scale);
    }
  }
  return out;
}

void add_sensor_noise(ImageF& signal, const CameraParams& params, const CameraModel& model, Rng& rng) {
  if (model.read_noise_sigma == 0.0 && model.shot_noise_scale == 0.0) return;
  const double g = gain_db_to_linear(params.gain_db());
  const double read = model.read_noise_sigma * g;
  const double shot = model.shot_noise_scale * g;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : signal.pixels()) {
    const double sigma = read + shot * std::sqrt(std::max(0.0, static_cast<double>(v)));
    v = static_cast<float>(v + sigma * normal(rng));
  }
}

ImageF apply_response(const ImageF& signal, const CameraModel& model) {
  ImageF out(signal.width(), signal.height());
  const float inv_gamma = static_cast<float>(1.0 / model.crf_gamma);
  auto in = signal.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const float x = std::clamp(in[i], 0.0f, 1.0f);
    dst[i] = x <= 0.0f ? 0.0f : std::pow(x, inv_gamma);
  }
  return out;
}

ImageU16 quantize(const ImageF& response, int bits) {
  const int max_code = (1 << bits) - 1;
  ImageU16 out(response.width(), response.height());
  auto in = response.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const float v = std::clamp(in[i], 0.0f, 1.0f) * static_cast<float>(max_code);
    dst[i] = static_cast<std::uint16_t>(std::lround(v));
  }
  return out;
}

Frame render_frame(const RadianceScene& scene, std::size_t t, const CameraParams& params,
                   const CameraModel& model, Rng& rng, int camera_id) {
  if (camera_id != 1 && camera_id != 2) throw InvalidArgument("camera_id must be 1 or 2");
  ImageF x = exposure_signal(scene, t, params, model);
  add_sensor_noise(x, params, model, rng);
  Frame frame;
  frame.image = quantize(apply_response(x, model), model.quantization_bits);
  frame.params = params;
  frame.camera_id = camera_id;
  frame.time_index = static_cast<std::int64_t>(t);
  frame.max_code = model.max_code();
  return frame;
}

CameraParams metered_params(const RadianceScene& scene, std::size_t t, const CameraModel& model,
                            double target_pixel_mean) {
  CameraModel clean = model;
  clean.blur_enabled = false;
  const CameraParams unit(0.0, kMaxExposureS);
  const ImageF base = exposure_signal(scene, t, unit, clean);
  const double base_product = unit.exposure_gain_product();

  auto mean_pixel = [&](double product) {
    const double k = product / base_product;
    double acc = 0.0;
    for (float v : base.pixels()) {
      const double x = std::clamp(v * k, 0.0, 1.0);
      acc += std::pow(x, 1.0 / model.crf_gamma);
    }
    return acc / static_cast<double>(base.size());
  };

  double lo = std::log(kMinExposureS);
  double hi = std::log(kMaxExposureS * gain_db_to_linear(kMaxGainDb));
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mean_pixel(std::exp(mid)) < target_pixel_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return params_from_product(std::exp(0.5 * (lo + hi)));
}

std::vector<bool> transition_frames(const RadianceScene& scene, double tolerance) {
  std::vector<bool> out(scene.length(), false);
  for (std::size_t t = 0; t + 1 < scene.length(); ++t) {
    if (std::abs(std::log(scene.illumination[t + 1] / scene.illumination[t])) > tolerance) {
      out[t] = true;
      out[t + 1] = true;
    }
  }
  return out;
}

}  // namespace camctl

#include "camctl/hash.hpp"

namespace camctl {

std::uint64_t scene_fingerprint(const RadianceScene& scene) {
  Fnv1a h;
  h.update_value(scene.radiance.width());
  h.update_value(scene.radiance.height());
  h.update(scene.radiance.pixels());
  for (const auto& s : scene.trajectory) {
    h.update_value(s.x);
    h.update_value(s.y);
    h.update_value(s.vx);
    h.update_value(s.vy);
  }
  h.update(std::span<const double>(scene.illumination));
  h.update_value(scene.viewport_width);
  h.update_value(scene.viewport_height);
  return h.digest();
}

}  // namespace camctl
