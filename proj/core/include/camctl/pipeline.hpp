#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "camctl/config.hpp"
#include "camctl/sampler.hpp"
#include "camctl/training.hpp"

namespace camctl {

/// Scene used for training episode `episode` of collection round `round`.
/// Disjoint from the evaluation scenes.
RadianceScene training_scene(const ExperimentConfig& config, int round, int episode);
std::uint64_t training_noise_seed(const ExperimentConfig& config, int round, int episode);

struct LabeledEpisode {
  CollectedDataset dataset;
  std::vector<LabeledSample> samples;
};

/// Collects one dual-camera episode for `round` and labels it.
LabeledEpisode collect_and_label(const ExperimentConfig& config, int round, int episode, const Checkpoint* prior);

/// Builds a training set from a label manifest and the episode directories it names.
TrainingSet load_training_set(const std::filesystem::path& manifest, int input_size);

struct PipelineResult {
  std::vector<Checkpoint> checkpoints;  // one per round
  std::vector<std::vector<EpochLog>> curves;
  std::vector<std::size_t> samples_per_round;
};

using Logger = std::function<void(const std::string&)>;

/// Iterative collection + training. With a non-empty `out_dir`, writes
/// label manifests, episode data (if `save_frames`), curves, and checkpoints.
PipelineResult run_training_pipeline(const ExperimentConfig& config, const std::filesystem::path& out_dir = {},
                                     bool save_frames = false, const Logger& log = {});

}  // namespace camctl
