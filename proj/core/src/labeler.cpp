#include "camctl/labeler.hpp"

#include <stdexcept>

namespace camctl {

std::string to_string(LabelMetric metric) {
  switch (metric) {
    case LabelMetric::feat:
      return "feat";
    case LabelMetric::match:
      return "match";
    case LabelMetric::hybrid:
      return "hybrid";
  }
  return "unknown";
}

LabelMetric parse_label_metric(const std::string& text) {
  if (text == "feat") return LabelMetric::feat;
  if (text == "match") return LabelMetric::match;
  if (text == "hybrid") return LabelMetric::hybrid;
  throw InvalidArgument("unknown label metric '" + text + "' (expected feat, match or hybrid)");
}

FeatChoice select_feat(const WindowScores& scores) {
  FeatChoice best;
  int best_score = scores.feat[0][0];
  for (int a = 0; a < kLabelHorizon; ++a) {
    for (int i = 0; i < kNumCameras; ++i) {
      if (scores.feat[a][i] > best_score) {
        best_score = scores.feat[a][i];
        best = {a + 1, i + 1};
      }
    }
  }
  return best;
}

MatchChoice select_match(const WindowScores& scores) {
  MatchChoice best;
  int best_score = scores.match[0][0][0];
  for (int b = 0; b < kLabelHorizon; ++b) {
    for (int i = 0; i < kNumCameras; ++i) {
      for (int j = 0; j < kNumCameras; ++j) {
        if (scores.match[b][i][j] > best_score) {
          best_score = scores.match[b][i][j];
          best = {b, i + 1, j + 1};
        }
      }
    }
  }
  return best;
}

MetricTable::MetricTable(const CollectedDataset& dataset, const FeatureExtractor& extractor,
                         const MatcherConfig& matcher) {
  const std::size_t n = dataset.size();
  feat_.resize(n);
  match_.resize(n > 0 ? n - 1 : 0);
  std::array<std::vector<Keypoint>, kNumCameras> prev;
  for (std::size_t t = 0; t < n; ++t) {
    std::array<std::vector<Keypoint>, kNumCameras> cur;
    for (int c = 1; c <= kNumCameras; ++c) {
      cur[c - 1] = extractor.detect(dataset.frame(t, c));
      feat_[t][c - 1] = static_cast<int>(cur[c - 1].size());
    }
    if (t > 0) {
      for (int i = 0; i < kNumCameras; ++i) {
        for (int j = 0; j < kNumCameras; ++j) match_[t - 1][i][j] = m_match(prev[i], cur[j], matcher);
      }
    }
    prev = std::move(cur);
  }
}

WindowScores MetricTable::window(std::size_t t) const {
  if (t + kLabelHorizon >= feat_.size()) throw InvalidArgument("window extends past the episode end");
  WindowScores w;
  for (int a = 0; a < kLabelHorizon; ++a) w.feat[a] = feat_[t + 1 + a];
  for (int b = 0; b < kLabelHorizon; ++b) w.match[b] = match_[t + b];
  return w;
}

bool has_future_window(const CollectedDataset& dataset, std::size_t t) {
  return t + kLabelHorizon < dataset.size();
}

std::optional<CameraParams> label_feat(const CollectedDataset& dataset, const MetricTable& table,
                                       std::size_t t) {
  if (!has_future_window(dataset, t)) return std::nullopt;
  const FeatChoice c = select_feat(table.window(t));
  return dataset.frame(t + c.offset, c.camera).params;
}

std::optional<CameraParams> label_match(const CollectedDataset& dataset, const MetricTable& table,
                                        std::size_t t) {
  if (!has_future_window(dataset, t)) return std::nullopt;
  const MatchChoice c = select_match(table.window(t));
  return dataset.frame(t + c.offset + 1, c.camera_to).params;
}

NormalizedParams blend_labels(const CameraParams& feat, const CameraParams& match, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("hybrid weight must be in [0, 1]");
  const NormalizedParams f = normalize(feat);
  const NormalizedParams m = normalize(match);
  if (weight == 1.0) return f;
  if (weight == 0.0) return m;
  return NormalizedParams{weight * f.gain + (1.0 - weight) * m.gain,
                          weight * f.exposure + (1.0 - weight) * m.exposure};
}

std::optional<NormalizedParams> label_hybrid(const CollectedDataset& dataset, const MetricTable& table,
                                             std::size_t t, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("hybrid weight must be in [0, 1]");
  const auto feat = label_feat(dataset, table, t);
  const auto match = label_match(dataset, table, t);
  if (!feat || !match) return std::nullopt;
  return blend_labels(*feat, *match, weight);
}

std::optional<NormalizedParams> label_target(const CollectedDataset& dataset, const MetricTable& table,
                                             std::size_t t, LabelMetric metric, double weight) {
  switch (metric) {
    case LabelMetric::feat:
      if (auto p = label_feat(dataset, table, t)) return normalize(*p);
      return std::nullopt;
    case LabelMetric::match:
      if (auto p = label_match(dataset, table, t)) return normalize(*p);
      return std::nullopt;
    case LabelMetric::hybrid:
      return label_hybrid(dataset, table, t, weight);
  }
  return std::nullopt;
}

std::vector<LabeledSample> build_training_set(const CollectedDataset& dataset, const MetricTable& table,
                                              LabelMetric metric, double weight, std::size_t episode) {
  if (dataset.size() < 7) throw InvalidArgument("training set needs at least 7 timesteps");
  if (table.size() != dataset.size()) throw InvalidArgument("metric table does not match the dataset");
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("label weight must be in [0, 1]");
  std::vector<LabeledSample> out;
  out.reserve(8 * (dataset.size() - 6));
  for (std::size_t t = 2; has_future_window(dataset, t); ++t) {
    const auto target = label_target(dataset, table, t, metric, weight);
    if (!target) continue;
    for (int combo = 0; combo < 8; ++combo) {
      LabeledSample s;
      for (int k = 0; k < 3; ++k) {
        const int camera = ((combo >> (2 - k)) & 1) + 1;
        s.frames[k] = {t - 2 + k, camera};
        s.params[k] = dataset.frame(t - 2 + k, camera).params;
      }
      s.target = *target;
      s.metric = metric;
      s.weight = weight;
      s.episode = episode;
      s.time_index = t;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace camctl
