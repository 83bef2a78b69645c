#include "camctl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace camctl {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw InvalidArgument("config section '" + path_ + "' must be an object");
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!used_.count(it.key())) throw InvalidArgument("unknown config key '" + qualify(it.key()) + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!node_.contains(key)) return;
    used_.insert(key);
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument("config key '" + qualify(key) + "': " + e.what());
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& child(const char* key) {
    used_.insert(key);
    return node_.at(key);
  }
  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

json to_json(const TunnelSceneConfig& c) {
  return {{"outdoor_level", c.outdoor_level},       {"attenuation_db", c.attenuation_db},
          {"transition_frames", c.transition_frames}, {"lead_in_frames", c.lead_in_frames},
          {"tunnel_frames", c.tunnel_frames},       {"lead_out_frames", c.lead_out_frames},
          {"texture_density", c.texture_density},   {"shading_log_sigma", c.shading_log_sigma},
          {"field_size", c.field_size},             {"viewport", c.viewport},
          {"speed_px_s", c.speed_px_s},             {"heading_rad", c.heading_rad},
          {"frame_rate_hz", c.frame_rate_hz}};
}

void read(Reader& r, TunnelSceneConfig& c) {
  r.get("outdoor_level", c.outdoor_level);
  r.get("attenuation_db", c.attenuation_db);
  r.get("transition_frames", c.transition_frames);
  r.get("lead_in_frames", c.lead_in_frames);
  r.get("tunnel_frames", c.tunnel_frames);
  r.get("lead_out_frames", c.lead_out_frames);
  r.get("texture_density", c.texture_density);
  r.get("shading_log_sigma", c.shading_log_sigma);
  r.get("field_size", c.field_size);
  r.get("viewport", c.viewport);
  r.get("speed_px_s", c.speed_px_s);
  r.get("heading_rad", c.heading_rad);
  r.get("frame_rate_hz", c.frame_rate_hz);
}

json to_json(const CameraModel& c) {
  return {{"crf_gamma", c.crf_gamma},
          {"read_noise_sigma", c.read_noise_sigma},
          {"shot_noise_scale", c.shot_noise_scale},
          {"full_well_scale", c.full_well_scale},
          {"blur_enabled", c.blur_enabled},
          {"quantization_bits", c.quantization_bits}};
}

void read(Reader& r, CameraModel& c) {
  r.get("crf_gamma", c.crf_gamma);
  r.get("read_noise_sigma", c.read_noise_sigma);
  r.get("shot_noise_scale", c.shot_noise_scale);
  r.get("full_well_scale", c.full_well_scale);
  r.get("blur_enabled", c.blur_enabled);
  r.get("quantization_bits", c.quantization_bits);
}

json to_json(const DetectorConfig& c) {
  return {{"gradient_sigma", c.gradient_sigma},
          {"window_sigma", c.window_sigma},
          {"min_eigen_threshold", c.min_eigen_threshold},
          {"nms_radius", c.nms_radius},
          {"max_features", c.max_features},
          {"descriptor_sigma", c.descriptor_sigma},
          {"patch_radius", c.patch_radius},
          {"border", c.border},
          {"pattern_seed", c.pattern_seed}};
}

void read(Reader& r, DetectorConfig& c) {
  r.get("gradient_sigma", c.gradient_sigma);
  r.get("window_sigma", c.window_sigma);
  r.get("min_eigen_threshold", c.min_eigen_threshold);
  r.get("nms_radius", c.nms_radius);
  r.get("max_features", c.max_features);
  r.get("descriptor_sigma", c.descriptor_sigma);
  r.get("patch_radius", c.patch_radius);
  r.get("border", c.border);
  r.get("pattern_seed", c.pattern_seed);
}

json to_json(const MatcherConfig& c) {
  return {{"max_hamming", c.max_hamming},
          {"pixel_tol", c.pixel_tol},
          {"ransac_iterations", c.ransac_iterations},
          {"ransac_seed", c.ransac_seed}};
}

void read(Reader& r, MatcherConfig& c) {
  r.get("max_hamming", c.max_hamming);
  r.get("pixel_tol", c.pixel_tol);
  r.get("ransac_iterations", c.ransac_iterations);
  r.get("ransac_seed", c.ransac_seed);
}

json to_json(const ReactiveConfig& c) {
  return {{"target_mean", c.target_mean}, {"rate_limit", c.rate_limit}, {"mean_floor", c.mean_floor}};
}

void read(Reader& r, ReactiveConfig& c) {
  r.get("target_mean", c.target_mean);
  r.get("rate_limit", c.rate_limit);
  r.get("mean_floor", c.mean_floor);
}

json to_json(const GradientMetricConfig& c) {
  return {{"gamma_grid", c.gamma_grid},
          {"delta", c.delta},
          {"lambda", c.lambda},
          {"update_gain", c.update_gain},
          {"rate_limit", c.rate_limit}};
}

void read(Reader& r, GradientMetricConfig& c) {
  r.get("gamma_grid", c.gamma_grid);
  r.get("delta", c.delta);
  r.get("lambda", c.lambda);
  r.get("update_gain", c.update_gain);
  r.get("rate_limit", c.rate_limit);
}

json to_json(const NetworkConfig& c) {
  return {{"input_size", c.input_size},
          {"conv_widths", c.conv_widths},
          {"fc_widths", c.fc_widths},
          {"kernel_size", c.kernel_size},
          {"dropout", c.dropout},
          {"dropout_scope", c.dropout_scope == DropoutScope::fc ? "fc" : "all"},
          {"epsilon", c.epsilon},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps}};
}

void read(Reader& r, NetworkConfig& c) {
  r.get("input_size", c.input_size);
  r.get("conv_widths", c.conv_widths);
  r.get("fc_widths", c.fc_widths);
  r.get("kernel_size", c.kernel_size);
  r.get("dropout", c.dropout);
  std::string scope = c.dropout_scope == DropoutScope::fc ? "fc" : "all";
  r.get("dropout_scope", scope);
  if (scope == "fc") {
    c.dropout_scope = DropoutScope::fc;
  } else if (scope == "all") {
    c.dropout_scope = DropoutScope::all;
  } else {
    throw InvalidArgument("dropout_scope must be 'fc' or 'all'");
  }
  r.get("epsilon", c.epsilon);
  r.get("bn_momentum", c.bn_momentum);
  r.get("bn_eps", c.bn_eps);
}

json to_json(const TrainHyper& c) {
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},       {"beta2", c.beta2},           {"adam_eps", c.adam_eps},
          {"holdout_fraction", c.holdout_fraction}};
}

void read(Reader& r, TrainHyper& c) {
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("learning_rate", c.learning_rate);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("adam_eps", c.adam_eps);
  r.get("holdout_fraction", c.holdout_fraction);
}

json to_json(const LabelConfig& c) { return {{"metric", to_string(c.metric)}, {"weight", c.weight}}; }

void read(Reader& r, LabelConfig& c) {
  std::string metric = to_string(c.metric);
  r.get("metric", metric);
  c.metric = parse_label_metric(metric);
  r.get("weight", c.weight);
}

json to_json(const PipelineConfig& c) {
  return {{"rounds", c.rounds},
          {"episodes_per_round", c.episodes_per_round},
          {"warm_start", c.warm_start},
          {"accumulate", c.accumulate}};
}

void read(Reader& r, PipelineConfig& c) {
  r.get("rounds", c.rounds);
  r.get("episodes_per_round", c.episodes_per_round);
  r.get("warm_start", c.warm_start);
  r.get("accumulate", c.accumulate);
}

json to_json(const EvalConfig& c) {
  return {{"episodes", c.episodes},
          {"static_episodes", c.static_episodes},
          {"dynamic_margin", c.dynamic_margin},
          {"min_matches", c.min_matches},
          {"failure_run", c.failure_run},
          {"transition_tolerance", c.transition_tolerance},
          {"controllers", c.controllers},
          {"fixed_params", {{"gain_db", c.fixed_params.gain_db()}, {"exposure_s", c.fixed_params.exposure_s()}}}};
}

void read(Reader& r, EvalConfig& c) {
  r.get("episodes", c.episodes);
  r.get("static_episodes", c.static_episodes);
  r.get("dynamic_margin", c.dynamic_margin);
  r.get("min_matches", c.min_matches);
  r.get("failure_run", c.failure_run);
  r.get("transition_tolerance", c.transition_tolerance);
  r.get("controllers", c.controllers);
  if (r.has("fixed_params")) {
    Reader p(r.child("fixed_params"), r.qualify("fixed_params"));
    double gain = c.fixed_params.gain_db();
    double exposure = c.fixed_params.exposure_s();
    p.get("gain_db", gain);
    p.get("exposure_s", exposure);
    c.fixed_params = CameraParams(gain, exposure);
  }
}

template <typename T>
void read_section(Reader& root, const char* key, T& out) {
  if (!root.has(key)) return;
  Reader r(root.child(key), key);
  read(r, out);
}

json to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"scene", to_json(c.scene)},
          {"camera", to_json(c.camera)},
          {"detector", to_json(c.detector)},
          {"matcher", to_json(c.matcher)},
          {"reactive", to_json(c.reactive)},
          {"gradient", to_json(c.gradient)},
          {"network", to_json(c.network)},
          {"train", to_json(c.train)},
          {"label", to_json(c.label)},
          {"pipeline", to_json(c.pipeline)},
          {"eval", to_json(c.eval)}};
}

json parse(const std::string& text) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  scene.validate();
  camera.validate();
  detector.validate();
  matcher.validate();
  reactive.validate();
  gradient.validate();
  network.validate();
  train.validate();
  if (!(label.weight >= 0.0 && label.weight <= 1.0)) throw InvalidArgument("label.weight must be in [0, 1]");
  if (pipeline.rounds < 1) throw InvalidArgument("pipeline.rounds must be >= 1");
  if (pipeline.episodes_per_round < 1) throw InvalidArgument("pipeline.episodes_per_round must be >= 1");
  if (eval.episodes < 0 || eval.static_episodes < 0) throw InvalidArgument("eval episode counts must be >= 0");
  if (eval.dynamic_margin < 0) throw InvalidArgument("eval.dynamic_margin must be >= 0");
  if (eval.min_matches < 0 || eval.failure_run < 1) throw InvalidArgument("invalid tracking-failure thresholds");
}

ExperimentConfig config_from_json(const std::string& text) {
  const json doc = parse(text);
  ExperimentConfig c;
  {
    Reader r(doc, "");
    r.get("seed", c.seed);
    read_section(r, "scene", c.scene);
    read_section(r, "camera", c.camera);
    read_section(r, "detector", c.detector);
    read_section(r, "matcher", c.matcher);
    read_section(r, "reactive", c.reactive);
    read_section(r, "gradient", c.gradient);
    read_section(r, "network", c.network);
    read_section(r, "train", c.train);
    read_section(r, "label", c.label);
    read_section(r, "pipeline", c.pipeline);
    read_section(r, "eval", c.eval);
  }
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& config, int indent) { return to_json(config).dump(indent); }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string network_config_to_json(const NetworkConfig& config) { return to_json(config).dump(); }

NetworkConfig network_config_from_json(const std::string& text) {
  const json doc = parse(text);
  NetworkConfig c;
  {
    Reader r(doc, "network");
    read(r, c);
  }
  c.validate();
  return c;
}

}  // namespace camctl
