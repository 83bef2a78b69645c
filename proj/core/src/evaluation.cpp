#include "camctl/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>

#include "camctl/network.hpp"
#include "camctl/sampler.hpp"
#include "json.hpp"

namespace camctl {

std::string to_string(SegmentTag tag) { return tag == SegmentTag::static_lighting ? "static" : "dynamic"; }

SegmentTag parse_segment_tag(const std::string& text) {
  if (text == "static") return SegmentTag::static_lighting;
  if (text == "dynamic") return SegmentTag::dynamic_lighting;
  throw InvalidArgument("unknown segment tag '" + text + "'");
}

std::vector<SegmentTag> segment_tags(const RadianceScene& scene, int margin, double tolerance) {
  const auto changes = transition_frames(scene, tolerance);
  const auto n = static_cast<long>(scene.length());
  std::vector<SegmentTag> tags(scene.length(), SegmentTag::static_lighting);
  for (long t = 0; t < static_cast<long>(changes.size()); ++t) {
    if (!changes[t]) continue;
    // A change between t and t+1 marks both frames.
    const long lo = std::max(0L, t - margin);
    const long hi = std::min(n - 1, t + 1 + margin);
    for (long k = lo; k <= hi; ++k) tags[k] = SegmentTag::dynamic_lighting;
  }
  return tags;
}

bool has_failure_run(std::span<const int> values, const FailureCriterion& criterion) {
  int run = 0;
  for (int v : values) {
    if (v != kUndefinedNfm && v < criterion.min_matches) {
      if (++run >= criterion.run_length) return true;
    } else {
      run = 0;
    }
  }
  return false;
}

double median(std::vector<int> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2]));
}

EpisodeTrace run_episode(Controller& controller, const EpisodeSetup& setup) {
  if (setup.scene == nullptr || setup.extractor == nullptr) throw InvalidArgument("episode setup is incomplete");
  const RadianceScene& scene = *setup.scene;
  const auto tags = segment_tags(scene, setup.dynamic_margin, setup.transition_tolerance);
  EpisodeTrace trace;
  trace.controller = controller.identity();
  trace.seed = setup.seed;
  trace.rows.reserve(scene.length());
  controller.reset();
  CameraParams params = setup.initial;
  std::deque<Frame> history;
  std::vector<Keypoint> previous;
  for (std::size_t t = 0; t < scene.length(); ++t) {
    Rng rng = derive_stream(setup.seed, 1, t);
    Frame frame = render_frame(scene, t, params, setup.model, rng, 1);
    const ImageF unit = to_unit_float(frame.image, frame.max_code);
    auto keypoints = setup.extractor->detect(unit);
    TraceRow row;
    row.time_index = t;
    row.params = params;
    row.m_feat = static_cast<int>(keypoints.size());
    row.nfm = t == 0 ? kUndefinedNfm : m_match(previous, keypoints, setup.matcher);
    row.mean_intensity = mean_value(unit);
    row.segment = tags[t];
    trace.rows.push_back(row);
    previous = std::move(keypoints);

    history.push_back(std::move(frame));
    if (history.size() > kHistoryFrames) history.pop_front();
    const std::vector<Frame> window(history.begin(), history.end());
    const ControllerCommand cmd = controller.step(window);
    if (!cmd.next.is_finite()) {
      throw ControllerFault("controller '" + controller.identity() + "' produced non-finite params at t=" +
                            std::to_string(t));
    }
    params = cmd.next;
  }
  return trace;
}

std::vector<SegmentStats> segment_stats(const EpisodeTrace& trace, const FailureCriterion& criterion) {
  if (trace.rows.empty()) throw InvalidArgument("segment stats need a nonempty trace");
  std::vector<SegmentStats> out;
  for (SegmentTag tag : {SegmentTag::static_lighting, SegmentTag::dynamic_lighting}) {
    bool present = false;
    std::vector<int> defined;
    std::vector<int> masked;
    masked.reserve(trace.rows.size());
    for (const auto& row : trace.rows) {
      if (row.segment != tag) {
        masked.push_back(kUndefinedNfm);
        continue;
      }
      present = true;
      masked.push_back(row.nfm);
      if (row.nfm != kUndefinedNfm) defined.push_back(row.nfm);
    }
    if (!present) continue;
    SegmentStats s;
    s.tag = tag;
    s.frames = static_cast<int>(defined.size());
    s.empty = defined.empty();
    if (!s.empty) {
      s.median_nfm = median(defined);
      s.min_nfm = *std::min_element(defined.begin(), defined.end());
    }
    s.tracking_failed = has_failure_run(masked, criterion);
    out.push_back(s);
  }
  return out;
}

bool episode_failed(const EpisodeTrace& trace, const FailureCriterion& criterion) {
  std::vector<int> values;
  values.reserve(trace.rows.size());
  for (const auto& row : trace.rows) values.push_back(row.nfm);
  return has_failure_run(values, criterion);
}

std::unique_ptr<Controller> make_controller(const std::string& identity, const ExperimentConfig& config,
                                            std::shared_ptr<const Predictor> predictor) {
  if (identity == "fixed") return std::make_unique<FixedController>(config.eval.fixed_params);
  if (identity == "reactive_ae_ag") return std::make_unique<ReactiveAeAgController>(config.reactive);
  if (identity == "gradient_metric") return std::make_unique<GradientMetricController>(config.gradient);
  if (identity == "learned") {
    if (!predictor) throw InvalidArgument("controller 'learned' needs a trained checkpoint");
    return std::make_unique<LearnedController>(std::move(predictor));
  }
  throw InvalidArgument("unknown controller '" + identity + "'");
}

std::vector<BenchmarkEpisode> benchmark_episodes(const ExperimentConfig& config) {
  std::vector<BenchmarkEpisode> out;
  auto add = [&](const std::string& scenario, std::size_t index, TunnelSceneConfig scene_cfg, std::uint64_t tag) {
    BenchmarkEpisode e;
    e.scenario = scenario;
    e.index = index;
    Rng scene_rng = derive_stream(config.seed, tag, index);
    e.scene = make_tunnel_scene(scene_cfg, scene_rng);
    e.noise_seed = mix_seed(derive_stream(config.seed, tag + 1, index)());
    out.push_back(std::move(e));
  };
  for (int i = 0; i < config.eval.episodes; ++i) add("tunnel", static_cast<std::size_t>(i), config.scene, 0xe7a1);
  TunnelSceneConfig flat = config.scene;
  flat.attenuation_db = 0.0;
  for (int i = 0; i < config.eval.static_episodes; ++i) add("constant", static_cast<std::size_t>(i), flat, 0xc057);
  return out;
}

ComparisonReport aggregate(std::vector<EpisodeTrace> traces, const FailureCriterion& criterion) {
  std::sort(traces.begin(), traces.end(), [](const EpisodeTrace& a, const EpisodeTrace& b) {
    return std::tie(a.scenario, a.controller, a.episode) < std::tie(b.scenario, b.controller, b.episode);
  });
  using Key = std::tuple<std::string, std::string, int>;
  struct Acc {
    int episodes = 0;
    double sum_median = 0.0;
    double sum_min = 0.0;
    int failures = 0;
  };
  std::map<Key, Acc> acc;
  std::map<std::pair<std::string, std::string>, TrackingRow> tracking;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& trace : traces) {
    const auto id = std::make_pair(trace.scenario, trace.controller);
    auto [it, inserted] = tracking.try_emplace(id, TrackingRow{trace.scenario, trace.controller, 0, 0});
    if (inserted) order.push_back(id);
    it->second.episodes += 1;
    if (!episode_failed(trace, criterion)) it->second.successes += 1;
    for (const auto& s : segment_stats(trace, criterion)) {
      auto& a = acc[{trace.scenario, trace.controller, static_cast<int>(s.tag)}];
      if (s.tracking_failed) a.failures += 1;
      if (s.empty) continue;
      a.episodes += 1;
      a.sum_median += s.median_nfm;
      a.sum_min += s.min_nfm;
    }
  }
  ComparisonReport report;
  for (const auto& [key, a] : acc) {
    ReportRow row;
    row.scenario = std::get<0>(key);
    row.controller = std::get<1>(key);
    row.segment = static_cast<SegmentTag>(std::get<2>(key));
    row.episodes = a.episodes;
    row.mean_median_nfm = a.episodes > 0 ? a.sum_median / a.episodes : 0.0;
    row.mean_min_nfm = a.episodes > 0 ? a.sum_min / a.episodes : 0.0;
    row.segment_failures = a.failures;
    report.rows.push_back(row);
  }
  for (const auto& id : order) report.tracking.push_back(tracking.at(id));
  report.traces = std::move(traces);
  return report;
}

ComparisonReport compare_controllers(const ExperimentConfig& config, std::shared_ptr<const Predictor> predictor,
                                     bool verbose) {
  config.validate();
  if (config.eval.controllers.size() < 2) throw InvalidArgument("comparison needs at least two controllers");
  std::vector<std::unique_ptr<Controller>> controllers;
  for (const auto& id : config.eval.controllers) controllers.push_back(make_controller(id, config, predictor));
  const FeatureExtractor extractor(config.detector);
  std::vector<EpisodeTrace> traces;
  for (const auto& ep : benchmark_episodes(config)) {
    EpisodeSetup setup;
    setup.scene = &ep.scene;
    setup.model = config.camera;
    setup.extractor = &extractor;
    setup.matcher = config.matcher;
    setup.seed = ep.noise_seed;
    setup.initial = metered_params(ep.scene, 0, config.camera, config.reactive.target_mean);
    setup.dynamic_margin = config.eval.dynamic_margin;
    setup.transition_tolerance = config.eval.transition_tolerance;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
      auto controller = controllers[c]->clone();
      EpisodeTrace trace = run_episode(*controller, setup);
      trace.controller = config.eval.controllers[c];
      trace.scenario = ep.scenario;
      trace.episode = ep.index;
      if (verbose) {
        std::cerr << "[compare] " << ep.scenario << " #" << ep.index << " " << trace.controller << " done\n";
      }
      traces.push_back(std::move(trace));
    }
  }
  return aggregate(std::move(traces), {config.eval.min_matches, config.eval.failure_run});
}

std::string format_report(const ComparisonReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-16s %-8s %8s %12s %10s %9s\n", "scenario", "controller", "segment",
                "episodes", "median_nfm", "min_nfm", "seg_fail");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-9s %-16s %-8s %8d %12.1f %10.1f %9d\n", r.scenario.c_str(),
                  r.controller.c_str(), to_string(r.segment).c_str(), r.episodes, r.mean_median_nfm, r.mean_min_nfm,
                  r.segment_failures);
    out << line;
  }
  out << "\n";
  std::snprintf(line, sizeof line, "%-9s %-16s %s\n", "scenario", "controller", "tracking_successes");
  out << line;
  for (const auto& t : report.tracking) {
    std::snprintf(line, sizeof line, "%-9s %-16s %d/%d\n", t.scenario.c_str(), t.controller.c_str(), t.successes,
                  t.episodes);
    out << line;
  }
  return out.str();
}

std::string report_to_json(const ComparisonReport& report, const FailureCriterion& criterion) {
  using nlohmann::json;
  json doc;
  doc["failure_criterion"] = {{"min_matches", criterion.min_matches}, {"run_length", criterion.run_length}};
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"scenario", r.scenario},
                    {"controller", r.controller},
                    {"segment", to_string(r.segment)},
                    {"episodes", r.episodes},
                    {"mean_median_nfm", r.mean_median_nfm},
                    {"mean_min_nfm", r.mean_min_nfm},
                    {"segment_failures", r.segment_failures}});
  }
  doc["rows"] = rows;
  json tracking = json::array();
  for (const auto& t : report.tracking) {
    tracking.push_back(
        {{"scenario", t.scenario}, {"controller", t.controller}, {"successes", t.successes}, {"episodes", t.episodes}});
  }
  doc["tracking"] = tracking;
  json episodes = json::array();
  for (const auto& trace : report.traces) {
    json segs = json::array();
    for (const auto& s : segment_stats(trace, criterion)) {
      segs.push_back({{"segment", to_string(s.tag)},
                      {"median_nfm", s.median_nfm},
                      {"min_nfm", s.min_nfm},
                      {"frames", s.frames},
                      {"tracking_failed", s.tracking_failed},
                      {"empty", s.empty}});
    }
    episodes.push_back({{"scenario", trace.scenario},
                        {"controller", trace.controller},
                        {"episode", trace.episode},
                        {"seed", trace.seed},
                        {"failed", episode_failed(trace, criterion)},
                        {"segments", segs}});
  }
  doc["episodes"] = episodes;
  return doc.dump(2);
}

}  // namespace camctl
