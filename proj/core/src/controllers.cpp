#include "camctl/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "camctl/image.hpp"
#include "camctl/network.hpp"

namespace camctl {

namespace {

const Frame& latest(std::span<const Frame> history) {
  if (history.empty()) throw InvalidArgument("controller step needs at least one frame");
  return history.back();
}

}  // namespace

CameraParams apply_brightness_factor(const CameraParams& params, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidArgument("brightness factor must be positive");
  if (factor == 1.0) return params;
  double exposure = params.exposure_s();
  double gain = gain_db_to_linear(params.gain_db());
  const double max_gain = gain_db_to_linear(kMaxGainDb);
  if (factor > 1.0) {
    const double new_exposure = std::min(exposure * factor, kMaxExposureS);
    const double rest = factor * exposure / new_exposure;
    exposure = new_exposure;
    gain = std::min(gain * rest, max_gain);
  } else {
    const double new_gain = std::max(gain * factor, 1.0);
    const double rest = factor * gain / new_gain;
    gain = new_gain;
    exposure = std::max(exposure * rest, kMinExposureS);
  }
  return {gain_linear_to_db(gain), exposure};
}

ControllerCommand FixedController::step(std::span<const Frame> history) {
  (void)latest(history);
  return {params_, identity()};
}

void ReactiveConfig::validate() const {
  if (!(target_mean > 0.0 && target_mean < 1.0)) throw InvalidArgument("target_mean must be in (0, 1)");
  if (!(rate_limit > 0.0 && rate_limit < 1.0)) throw InvalidArgument("rate_limit must be in (0, 1)");
  if (!(mean_floor > 0.0)) throw InvalidArgument("mean_floor must be positive");
}

ReactiveAeAgController::ReactiveAeAgController(ReactiveConfig config) : config_(config) { config_.validate(); }

double ReactiveAeAgController::correction(double mean) const {
  const double r = config_.target_mean / std::max(mean, config_.mean_floor);
  return std::clamp(r, 1.0 - config_.rate_limit, 1.0 + config_.rate_limit);
}

ControllerCommand ReactiveAeAgController::step(std::span<const Frame> history) {
  const Frame& frame = latest(history);
  const double mean = mean_value(to_unit_float(frame.image, frame.max_code));
  return {apply_brightness_factor(frame.params, correction(mean)), identity()};
}

void GradientMetricConfig::validate() const {
  if (gamma_grid.empty()) throw InvalidArgument("gamma grid must not be empty");
  for (double g : gamma_grid) {
    if (!(g > 0.0)) throw InvalidArgument("gamma grid values must be positive");
  }
  if (!(delta >= 0.0 && delta < 1.0)) throw InvalidArgument("delta must be in [0, 1)");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(update_gain > 0.0)) throw InvalidArgument("update_gain must be positive");
  if (!(rate_limit > 0.0 && rate_limit < 1.0)) throw InvalidArgument("rate_limit must be in (0, 1)");
}

double gradient_information(const ImageF& image, double delta, double lambda) {
  const int w = image.width();
  const int h = image.height();
  if (w < 3 || h < 3) return 0.0;
  const double norm = std::log(lambda * (1.0 - delta) + 1.0);
  double total = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (image(x + 1, y) - image(x - 1, y));
      const double gy = 0.5 * (image(x, y + 1) - image(x, y - 1));
      const double m = std::min(std::sqrt(gx * gx + gy * gy), 1.0);
      if (m >= delta) total += std::log(lambda * (m - delta) + 1.0) / norm;
    }
  }
  return total;
}

GradientMetricController::GradientMetricController(GradientMetricConfig config) : config_(std::move(config)) {
  config_.validate();
}

double GradientMetricController::best_gamma(const ImageF& image) const {
  double best = 1.0;
  double best_score = gradient_information(image, config_.delta, config_.lambda);
  ImageF mapped(image.width(), image.height());
  for (double gamma : config_.gamma_grid) {
    if (gamma == 1.0) continue;
    auto src = image.pixels();
    auto dst = mapped.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(std::pow(src[i], gamma));
    const double score = gradient_information(mapped, config_.delta, config_.lambda);
    if (score > best_score) {
      best_score = score;
      best = gamma;
    }
  }
  return best;
}

double GradientMetricController::gamma_to_factor(double gamma) const {
  const double alpha = gamma < 1.0 ? 1.0 : 0.5;
  return 1.0 + alpha * config_.update_gain * (1.0 - gamma);
}

ControllerCommand GradientMetricController::step(std::span<const Frame> history) {
  const Frame& frame = latest(history);
  const double gamma = best_gamma(to_unit_float(frame.image, frame.max_code));
  const double factor =
      std::clamp(gamma_to_factor(gamma), 1.0 - config_.rate_limit, 1.0 + config_.rate_limit);
  return {apply_brightness_factor(frame.params, factor), identity()};
}

LearnedController::LearnedController(std::shared_ptr<const Predictor> predictor)
    : predictor_(std::move(predictor)) {
  if (!predictor_) throw InvalidArgument("learned controller needs a predictor");
}

ControllerCommand LearnedController::step(std::span<const Frame> history) {
  (void)latest(history);
  const std::size_t n = std::min<std::size_t>(history.size(), kHistoryFrames);
  return {predictor_->predict_next(history.subspan(history.size() - n)), identity()};
}

}  // namespace camctl
