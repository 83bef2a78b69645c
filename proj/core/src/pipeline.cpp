#include "camctl/pipeline.hpp"

#include <map>

#include "camctl/checkpoint.hpp"
#include "camctl/dataset_io.hpp"

namespace camctl {

RadianceScene training_scene(const ExperimentConfig& config, int round, int episode) {
  Rng rng = derive_stream(config.seed, 0x7a110 + static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(episode));
  return make_tunnel_scene(config.scene, rng);
}

std::uint64_t training_noise_seed(const ExperimentConfig& config, int round, int episode) {
  return mix_seed(derive_stream(config.seed, 0x7a190 + static_cast<std::uint64_t>(round),
                                static_cast<std::uint64_t>(episode))());
}

LabeledEpisode collect_and_label(const ExperimentConfig& config, int round, int episode, const Checkpoint* prior) {
  const RadianceScene scene = training_scene(config, round, episode);
  LabeledEpisode out;
  out.dataset = iterative_collection(round, prior, scene, config.camera, training_noise_seed(config, round, episode),
                                     config.reactive);
  const FeatureExtractor extractor(config.detector);
  const MetricTable table(out.dataset, extractor, config.matcher);
  out.samples = build_training_set(out.dataset, table, config.label.metric, config.label.weight,
                                   static_cast<std::size_t>(episode));
  return out;
}

TrainingSet load_training_set(const std::filesystem::path& manifest, int input_size) {
  const LabelManifest m = read_label_manifest(manifest);
  std::map<std::size_t, std::vector<LabeledSample>> by_episode;
  for (const auto& s : m.samples) by_episode[s.episode].push_back(s);
  TrainingSet set(input_size);
  const auto base = manifest.parent_path();
  for (auto& [episode, samples] : by_episode) {
    if (episode >= m.episode_dirs.size()) throw IoError("label manifest references a missing episode");
    std::filesystem::path dir = m.episode_dirs[episode];
    if (dir.is_relative()) dir = base / dir;
    const CollectedDataset ds = load_episode(dir);
    set.add_episode(ds, samples, static_cast<int>(episode));
  }
  return set;
}

PipelineResult run_training_pipeline(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                     bool save_frames, const Logger& log) {
  config.validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  PipelineResult result;
  result.checkpoints.reserve(static_cast<std::size_t>(config.pipeline.rounds));
  TrainingSet set(config.network.input_size);
  const Checkpoint* prior = nullptr;
  for (int round = 1; round <= config.pipeline.rounds; ++round) {
    if (!config.pipeline.accumulate) set = TrainingSet(config.network.input_size);
    std::vector<LabeledSample> round_samples;
    std::vector<std::string> dirs;
    for (int e = 0; e < config.pipeline.episodes_per_round; ++e) {
      LabeledEpisode ep = collect_and_label(config, round, e, prior);
      const int group = (round - 1) * config.pipeline.episodes_per_round + e;
      set.add_episode(ep.dataset, ep.samples, group);
      say("round " + std::to_string(round) + " episode " + std::to_string(e) + ": " +
          std::to_string(ep.samples.size()) + " samples (reference " + ep.dataset.controller_identity + ")");
      if (!out_dir.empty()) {
        const std::string name = "round" + std::to_string(round) + "_episode" + std::to_string(e);
        if (save_frames) save_episode(out_dir / name, ep.dataset);
        dirs.push_back(name);
        round_samples.insert(round_samples.end(), ep.samples.begin(), ep.samples.end());
      }
    }
    if (!out_dir.empty()) {
      write_label_manifest(out_dir / ("labels_round" + std::to_string(round) + ".csv"), round_samples, dirs);
    }
    const Checkpoint* warm = config.pipeline.warm_start ? prior : nullptr;
    TrainResult trained = train(set, config.network, config.train, mix_seed(config.seed + static_cast<std::uint64_t>(round)),
                                round, warm, [&](const EpochLog& e) {
                                  say("round " + std::to_string(round) + " epoch " + std::to_string(e.epoch) +
                                      " train " + std::to_string(e.train_loss) + " holdout " +
                                      std::to_string(e.holdout_loss));
                                });
    result.samples_per_round.push_back(set.size());
    if (!out_dir.empty()) {
      save_checkpoint(out_dir / ("checkpoint_round" + std::to_string(round) + ".bin"), trained.checkpoint);
      write_curve_csv(out_dir / ("curve_round" + std::to_string(round) + ".csv"), trained.curve);
    }
    result.curves.push_back(std::move(trained.curve));
    result.checkpoints.push_back(std::move(trained.checkpoint));
    prior = &result.checkpoints.back();
  }
  return result;
}

}  // namespace camctl
