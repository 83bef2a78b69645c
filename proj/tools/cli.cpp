#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "camctl/checkpoint.hpp"
#include "camctl/config.hpp"
#include "camctl/dataset_io.hpp"
#include "camctl/evaluation.hpp"
#include "camctl/labeler.hpp"
#include "camctl/pipeline.hpp"
#include "camctl/plot.hpp"
#include "camctl/sampler.hpp"

namespace camctl {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = ".";
  bool quiet = false;
};

class Context {
 public:
  Context(const Globals& g, std::ostream& out) : globals_(g), out_(out) {
    if (!g.config_path.empty()) config_ = load_config(g.config_path);
    if (g.seed) config_.seed = *g.seed;
    config_.validate();
    fs::create_directories(out_dir());
  }
  ExperimentConfig& config() { return config_; }
  fs::path out_dir() const { return globals_.out_dir; }
  void info(const std::string& msg) const {
    if (!globals_.quiet) out_ << msg << "\n";
  }
  std::ostream& out() const { return out_; }

 private:
  const Globals& globals_;
  std::ostream& out_;
  ExperimentConfig config_;
};

std::shared_ptr<const Predictor> predictor_from(const std::string& path) {
  return std::make_shared<const Predictor>(load_checkpoint(path));
}

std::string find_checkpoint(const Context& ctx, const std::string& given) {
  if (!given.empty()) return given;
  for (int r = 8; r >= 1; --r) {
    const fs::path p = ctx.out_dir() / ("checkpoint_round" + std::to_string(r) + ".bin");
    if (fs::exists(p)) return p.string();
  }
  return {};
}

void cmd_scene(Context& ctx, bool constant, int episode, int frames) {
  TunnelSceneConfig cfg = ctx.config().scene;
  if (constant) cfg.attenuation_db = 0.0;
  Rng rng = derive_stream(ctx.config().seed, 0x5ce7e, static_cast<std::uint64_t>(episode));
  const RadianceScene scene = make_tunnel_scene(cfg, rng);
  std::ostringstream csv;
  csv << "time_index,illumination,metered_gain_db,metered_exposure_s\n";
  for (std::size_t t = 0; t < scene.length(); ++t) {
    const CameraParams p = metered_params(scene, t, ctx.config().camera);
    csv << t << ',' << scene.illumination[t] << ',' << p.gain_db() << ',' << p.exposure_s() << '\n';
  }
  write_text_file(ctx.out_dir() / "illumination.csv", csv.str());
  const auto changes = transition_frames(scene, ctx.config().eval.transition_tolerance);
  const auto [lo, hi] = std::minmax_element(scene.illumination.begin(), scene.illumination.end());
  std::ostringstream info;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(scene_fingerprint(scene)));
  info << "{\n  \"fingerprint\": \"" << hash << "\",\n  \"frames\": " << scene.length()
       << ",\n  \"illumination_ratio\": " << (*hi / *lo) << ",\n  \"transition_frames\": "
       << std::count(changes.begin(), changes.end(), true) << "\n}\n";
  write_text_file(ctx.out_dir() / "scene.json", info.str());
  for (int t = 0; t < frames && t < static_cast<int>(scene.length()); ++t) {
    Rng noise = derive_stream(ctx.config().seed, 1, static_cast<std::uint64_t>(t));
    const auto p = metered_params(scene, static_cast<std::size_t>(t), ctx.config().camera);
    const Frame f = render_frame(scene, static_cast<std::size_t>(t), p, ctx.config().camera, noise, 1);
    write_pgm(ctx.out_dir() / frame_file_name(static_cast<std::size_t>(t), 1), f.image, f.max_code);
  }
  ctx.info("scene " + std::string(hash) + ": " + std::to_string(scene.length()) + " frames written to " +
           ctx.out_dir().string());
}

void cmd_collect(Context& ctx, int round, const std::string& checkpoint, int episodes) {
  std::optional<Checkpoint> prior;
  if (!checkpoint.empty()) prior = load_checkpoint(checkpoint);
  if (round >= 2 && !prior) throw InvalidArgument("collect --round " + std::to_string(round) + " needs --checkpoint");
  const int n = episodes > 0 ? episodes : ctx.config().pipeline.episodes_per_round;
  for (int e = 0; e < n; ++e) {
    const RadianceScene scene = training_scene(ctx.config(), round, e);
    const CollectedDataset ds = iterative_collection(round, prior ? &*prior : nullptr, scene, ctx.config().camera,
                                                     training_noise_seed(ctx.config(), round, e), ctx.config().reactive);
    const fs::path dir = ctx.out_dir() / ("round" + std::to_string(round) + "_episode" + std::to_string(e));
    save_episode(dir, ds);
    ctx.info("collected " + dir.string() + " (" + std::to_string(ds.size()) + " timesteps, reference " +
             ds.controller_identity + (ds.diminishing_returns ? ", beyond round 2: diminishing returns" : "") + ")");
  }
}

void cmd_label(Context& ctx, const std::vector<std::string>& episodes, const std::string& metric_name,
               std::optional<double> weight, const std::string& output) {
  const LabelMetric metric = parse_label_metric(metric_name.empty() ? to_string(ctx.config().label.metric) : metric_name);
  const double w = weight.value_or(ctx.config().label.weight);
  if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("--weight must be in [0, 1]");
  if (episodes.empty()) throw InvalidArgument("label needs at least one episode directory");
  const FeatureExtractor extractor(ctx.config().detector);
  std::vector<LabeledSample> all;
  std::vector<std::string> dirs;
  const fs::path manifest = output.empty() ? ctx.out_dir() / "labels.csv" : fs::path(output);
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const CollectedDataset ds = load_episode(episodes[e]);
    const MetricTable table(ds, extractor, ctx.config().matcher);
    auto samples = build_training_set(ds, table, metric, w, e);
    all.insert(all.end(), samples.begin(), samples.end());
    dirs.push_back(fs::absolute(episodes[e]).lexically_normal().string());
    ctx.info("labelled " + episodes[e] + ": " + std::to_string(samples.size()) + " samples");
  }
  write_label_manifest(manifest, all, dirs);
  ctx.info("wrote " + manifest.string());
}

void cmd_train(Context& ctx, const std::string& labels, int round, const std::string& checkpoint, bool pipeline,
               bool save_frames) {
  if (pipeline) {
    const auto result = run_training_pipeline(ctx.config(), ctx.out_dir(), save_frames,
                                              [&](const std::string& m) { ctx.info(m); });
    ctx.info("pipeline finished: " + std::to_string(result.checkpoints.size()) + " rounds");
    return;
  }
  if (round < 1) throw InvalidArgument("--round must be >= 1");
  std::optional<Checkpoint> prior;
  if (!checkpoint.empty()) prior = load_checkpoint(checkpoint);
  if (round >= 2 && !prior) {
    throw InvalidArgument("train --round " + std::to_string(round) + " needs a round-" + std::to_string(round - 1) +
                          " checkpoint (--checkpoint)");
  }
  const fs::path manifest = labels.empty() ? ctx.out_dir() / "labels.csv" : fs::path(labels);
  const TrainingSet set = load_training_set(manifest, ctx.config().network.input_size);
  const bool warm = prior && ctx.config().pipeline.warm_start && prior->config == ctx.config().network;
  const TrainResult result =
      train(set, ctx.config().network, ctx.config().train, mix_seed(ctx.config().seed + static_cast<std::uint64_t>(round)),
            round, warm ? &*prior : nullptr, [&](const EpochLog& e) {
              ctx.info("epoch " + std::to_string(e.epoch) + " train " + std::to_string(e.train_loss) + " holdout " +
                       std::to_string(e.holdout_loss));
            });
  const fs::path out = ctx.out_dir() / ("checkpoint_round" + std::to_string(round) + ".bin");
  save_checkpoint(out, result.checkpoint);
  write_curve_csv(ctx.out_dir() / ("curve_round" + std::to_string(round) + ".csv"), result.curve);
  ctx.info("wrote " + out.string());
}

void cmd_eval(Context& ctx, const std::string& controller_id, const std::string& checkpoint,
              const std::string& scenario, int episode) {
  ExperimentConfig cfg = ctx.config();
  if (scenario == "tunnel") {
    cfg.eval.episodes = episode + 1;
    cfg.eval.static_episodes = 0;
  } else if (scenario == "constant") {
    cfg.eval.episodes = 0;
    cfg.eval.static_episodes = episode + 1;
  } else {
    throw InvalidArgument("--scenario must be 'tunnel' or 'constant'");
  }
  std::shared_ptr<const Predictor> predictor;
  if (controller_id == "learned") {
    const std::string path = find_checkpoint(ctx, checkpoint);
    if (path.empty()) throw InvalidArgument("controller 'learned' needs --checkpoint");
    predictor = predictor_from(path);
  }
  auto episodes = benchmark_episodes(cfg);
  const BenchmarkEpisode& ep = episodes.back();
  const FeatureExtractor extractor(cfg.detector);
  EpisodeSetup setup;
  setup.scene = &ep.scene;
  setup.model = cfg.camera;
  setup.extractor = &extractor;
  setup.matcher = cfg.matcher;
  setup.seed = ep.noise_seed;
  setup.initial = metered_params(ep.scene, 0, cfg.camera, cfg.reactive.target_mean);
  setup.dynamic_margin = cfg.eval.dynamic_margin;
  setup.transition_tolerance = cfg.eval.transition_tolerance;
  auto controller = make_controller(controller_id, cfg, predictor);
  EpisodeTrace trace = run_episode(*controller, setup);
  trace.controller = controller_id;
  trace.scenario = ep.scenario;
  trace.episode = ep.index;
  const fs::path path = ctx.out_dir() / trace_file_name(trace);
  write_trace_csv(path, trace);
  const FailureCriterion crit{cfg.eval.min_matches, cfg.eval.failure_run};
  std::ostringstream summary;
  for (const auto& s : segment_stats(trace, crit)) {
    summary << to_string(s.tag) << ": median_nfm " << s.median_nfm << " min_nfm " << s.min_nfm << " frames "
            << s.frames << (s.tracking_failed ? " FAILED" : " ok") << "\n";
  }
  summary << "episode " << (episode_failed(trace, crit) ? "failed" : "tracked") << "; trace " << path.string();
  ctx.info(summary.str());
}

void cmd_compare(Context& ctx, const std::string& checkpoint, const std::vector<std::string>& controllers) {
  ExperimentConfig cfg = ctx.config();
  if (!controllers.empty()) cfg.eval.controllers = controllers;
  std::shared_ptr<const Predictor> predictor;
  if (std::find(cfg.eval.controllers.begin(), cfg.eval.controllers.end(), "learned") != cfg.eval.controllers.end()) {
    const std::string path = find_checkpoint(ctx, checkpoint);
    if (path.empty()) throw InvalidArgument("comparison includes 'learned' but no checkpoint was given");
    predictor = predictor_from(path);
  }
  const ComparisonReport report = compare_controllers(cfg, predictor);
  const fs::path traces = ctx.out_dir() / "traces";
  fs::create_directories(traces);
  for (const auto& t : report.traces) write_trace_csv(traces / trace_file_name(t), t);
  const FailureCriterion crit{cfg.eval.min_matches, cfg.eval.failure_run};
  const std::string text = format_report(report);
  write_text_file(ctx.out_dir() / "report.txt", text);
  write_text_file(ctx.out_dir() / "report.json", report_to_json(report, crit) + "\n");
  ctx.info(text);
}

void cmd_plot(Context& ctx, const std::vector<std::string>& traces, const std::string& curve,
              const std::string& output) {
  if (traces.empty() && curve.empty()) throw InvalidArgument("plot needs --traces or --curve");
  ImageRgb image;
  if (!curve.empty()) {
    std::vector<EpochLog> logs;
    std::istringstream in(read_text_file(curve));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      EpochLog e;
      char c1, c2;
      std::istringstream row(line);
      std::string ho;
      row >> e.epoch >> c1 >> e.train_loss >> c2 >> ho;
      e.holdout_loss = ho == "nan" || ho == "-nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(ho);
      logs.push_back(e);
    }
    image = plot_curve(logs);
  } else {
    std::vector<EpisodeTrace> loaded;
    for (const auto& t : traces) loaded.push_back(read_trace_csv(fs::path(t)));
    image = plot_traces(loaded);
  }
  const fs::path out = output.empty() ? ctx.out_dir() / "plot.ppm" : fs::path(output);
  write_ppm(out, image);
  ctx.info("wrote " + out.string());
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predictive camera gain/exposure control: simulate, collect, label, train, evaluate"};
  app.name("camctl");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--config", g.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  bool constant = false;
  int scene_episode = 0, scene_frames = 0;
  auto* scene = app.add_subcommand("scene", "Generate a scene and write its profile and previews");
  scene->add_flag("--constant", constant, "Constant illumination (0 dB)");
  scene->add_option("--episode", scene_episode, "Scene index")->check(CLI::NonNegativeNumber);
  scene->add_option("--frames", scene_frames, "Render this many metered preview frames")->check(CLI::NonNegativeNumber);

  int collect_round = 1, collect_episodes = 0;
  std::string collect_checkpoint;
  auto* collect = app.add_subcommand("collect", "Collect dual-camera episodes");
  collect->add_option("--round", collect_round, "Collection round")->check(CLI::PositiveNumber);
  collect->add_option("--checkpoint", collect_checkpoint, "Checkpoint for the learned reference (round >= 2)");
  collect->add_option("--episodes", collect_episodes, "Episode count (default from config)");

  std::vector<std::string> label_dirs;
  std::string label_metric, label_output;
  std::optional<double> label_weight;
  auto* label = app.add_subcommand("label", "Build a labelled training manifest from episodes");
  label->add_option("episodes", label_dirs, "Episode directories")->required();
  label->add_option("--metric", label_metric, "feat | match | hybrid")
      ->check(CLI::IsMember({"feat", "match", "hybrid"}));
  label->add_option("--weight", label_weight, "Hybrid weight in [0, 1]")->check(CLI::Range(0.0, 1.0));
  label->add_option("--output", label_output, "Manifest path (default <out-dir>/labels.csv)");

  std::string train_labels, train_checkpoint;
  int train_round = 1;
  bool train_pipeline = false, train_save_frames = false;
  auto* train_cmd = app.add_subcommand("train", "Train the network");
  train_cmd->add_option("--labels", train_labels, "Label manifest (default <out-dir>/labels.csv)");
  train_cmd->add_option("--round", train_round, "Training round")->check(CLI::PositiveNumber);
  train_cmd->add_option("--checkpoint", train_checkpoint, "Previous-round checkpoint");
  train_cmd->add_flag("--pipeline", train_pipeline, "Run the full iterative collect/label/train pipeline");
  train_cmd->add_flag("--save-frames", train_save_frames, "With --pipeline, also write episode frames");

  std::string eval_controller = "reactive_ae_ag", eval_checkpoint, eval_scenario = "tunnel";
  int eval_episode = 0;
  auto* eval = app.add_subcommand("eval", "Run one controller on one benchmark episode");
  eval->add_option("--controller", eval_controller, "Controller identity")
      ->check(CLI::IsMember({"fixed", "reactive_ae_ag", "gradient_metric", "learned"}));
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint for the learned controller");
  eval->add_option("--scenario", eval_scenario, "tunnel | constant")->check(CLI::IsMember({"tunnel", "constant"}));
  eval->add_option("--episode", eval_episode, "Benchmark episode index")->check(CLI::NonNegativeNumber);

  std::string compare_checkpoint;
  std::vector<std::string> compare_controllers_list;
  auto* compare = app.add_subcommand("compare", "Compare controllers on the benchmark");
  compare->add_option("--checkpoint", compare_checkpoint, "Checkpoint for the learned controller");
  compare->add_option("--controllers", compare_controllers_list, "Controller identities (overrides config)")
      ->delimiter(',');

  std::vector<std::string> plot_traces_list;
  std::string plot_curve_path, plot_output;
  auto* plot = app.add_subcommand("plot", "Render NFM/parameter curves or a training curve");
  plot->add_option("--traces", plot_traces_list, "Trace CSV files (one episode)");
  plot->add_option("--curve", plot_curve_path, "Training curve CSV");
  plot->add_option("--output", plot_output, "Output PPM (default <out-dir>/plot.ppm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    Context ctx(g, out);
    if (*scene) cmd_scene(ctx, constant, scene_episode, scene_frames);
    if (*collect) cmd_collect(ctx, collect_round, collect_checkpoint, collect_episodes);
    if (*label) cmd_label(ctx, label_dirs, label_metric, label_weight, label_output);
    if (*train_cmd) cmd_train(ctx, train_labels, train_round, train_checkpoint, train_pipeline, train_save_frames);
    if (*eval) cmd_eval(ctx, eval_controller, eval_checkpoint, eval_scenario, eval_episode);
    if (*compare) cmd_compare(ctx, compare_checkpoint, compare_controllers_list);
    if (*plot) cmd_plot(ctx, plot_traces_list, plot_curve_path, plot_output);
  } catch (const std::exception& e) {
    err << "camctl: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace camctl
