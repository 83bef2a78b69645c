#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "camctl/camera.hpp"
#include "camctl/controllers.hpp"
#include "camctl/features.hpp"
#include "camctl/labeler.hpp"
#include "camctl/network.hpp"
#include "camctl/scene_sim.hpp"
#include "camctl/training.hpp"

namespace camctl {

struct LabelConfig {
  LabelMetric metric = LabelMetric::hybrid;
  double weight = 0.5;
};

struct PipelineConfig {
  int rounds = 2;
  int episodes_per_round = 4;
  bool warm_start = true;    // later rounds continue from the previous checkpoint
  bool accumulate = true;    // later rounds train on all rounds' data
};

struct EvalConfig {
  int episodes = 10;          // tunnel episodes
  int static_episodes = 4;    // constant-illumination episodes
  int dynamic_margin = 15;    // frames either side of a transition
  int min_matches = 20;       // tracking-failure floor
  int failure_run = 3;        // consecutive frames below the floor
  double transition_tolerance = 0.01;
  std::vector<std::string> controllers = {"reactive_ae_ag", "gradient_metric", "learned"};
  CameraParams fixed_params{0.0, 1e-3};
};

/// Every tunable of a run. Files are JSON; missing keys keep defaults and
/// unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  TunnelSceneConfig scene;
  CameraModel camera;
  DetectorConfig detector;
  MatcherConfig matcher;
  ReactiveConfig reactive;
  GradientMetricConfig gradient;
  NetworkConfig network;
  TrainHyper train;
  LabelConfig label;
  PipelineConfig pipeline;
  EvalConfig eval;

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config, int indent = 2);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string network_config_to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const std::string& text);

}  // namespace camctl
