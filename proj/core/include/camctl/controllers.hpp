#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "camctl/camera.hpp"

namespace camctl {

class Predictor;

struct ControllerCommand {
  CameraParams next;
  std::string identity;
};

/// Closed-loop camera parameter controller. `history` holds the most recent
/// frames, oldest first, each carrying the params that produced it.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string identity() const = 0;
  virtual ControllerCommand step(std::span<const Frame> history) = 0;
  /// Clears internal state before a new episode.
  virtual void reset() {}
  virtual std::unique_ptr<Controller> clone() const = 0;
};

/// Multiplies the exposure*gain product by `factor`. Brightening raises
/// exposure first and then gain; darkening lowers gain first and then
/// exposure. Results are clamped to the legal ranges.
CameraParams apply_brightness_factor(const CameraParams& params, double factor);

class FixedController final : public Controller {
 public:
  explicit FixedController(CameraParams params) : params_(params) {}
  std::string identity() const override { return "fixed"; }
  ControllerCommand step(std::span<const Frame> history) override;
  std::unique_ptr<Controller> clone() const override { return std::make_unique<FixedController>(*this); }

 private:
  CameraParams params_;
};

struct ReactiveConfig {
  double target_mean = 0.45;  // fraction of full scale
  double rate_limit = 0.15;   // per-frame factor in [1 - rho, 1 + rho]
  double mean_floor = 1e-3;

  void validate() const;
};

/// Rate-limited mean-intensity feedback standing in for a built-in AG+AE.
class ReactiveAeAgController final : public Controller {
 public:
  explicit ReactiveAeAgController(ReactiveConfig config = {});
  std::string identity() const override { return "reactive_ae_ag"; }
  ControllerCommand step(std::span<const Frame> history) override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<ReactiveAeAgController>(*this);
  }

  /// Correction factor for a frame with mean intensity `mean` (in [0,1]).
  double correction(double mean) const;

 private:
  ReactiveConfig config_;
};

struct GradientMetricConfig {
  std::vector<double> gamma_grid = {0.5, 0.67, 0.8, 1.0, 1.25, 1.5, 2.0};
  double delta = 0.06;       // gradient magnitudes below this score zero
  double lambda = 1000.0;    // log-saturation strength
  double update_gain = 1.0;  // K in the exposure update
  double rate_limit = 0.15;

  void validate() const;
};

/// Saturating log-gradient metric of an image in [0,1]: the sum over pixels
/// of log(lambda * (m - delta) + 1) / log(lambda * (1 - delta) + 1) for
/// normalized gradient magnitudes m >= delta.
double gradient_information(const ImageF& image, double delta, double lambda);

/// Reactive baseline that picks the gamma maximizing gradient information
/// on synthetic gamma-corrected copies of the latest frame.
class GradientMetricController final : public Controller {
 public:
  explicit GradientMetricController(GradientMetricConfig config = {});
  std::string identity() const override { return "gradient_metric"; }
  ControllerCommand step(std::span<const Frame> history) override;
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<GradientMetricController>(*this);
  }

  /// Gamma with the largest metric; ties keep gamma = 1.
  double best_gamma(const ImageF& image) const;
  /// Exposure factor for a chosen gamma before rate limiting.
  double gamma_to_factor(double gamma) const;

 private:
  GradientMetricConfig config_;
};

/// Network-driven predictive controller.
class LearnedController final : public Controller {
 public:
  explicit LearnedController(std::shared_ptr<const Predictor> predictor);
  std::string identity() const override { return "learned"; }
  ControllerCommand step(std::span<const Frame> history) override;
  std::unique_ptr<Controller> clone() const override { return std::make_unique<LearnedController>(*this); }

 private:
  std::shared_ptr<const Predictor> predictor_;
};

}  // namespace camctl
