#include <gtest/gtest.h>

#include <cmath>

#include "camctl/labeler.hpp"
#include "helpers.hpp"

using namespace camctl;

namespace {

const CameraParams kSaturating(30.0, 30e-3);

Frame render(const RadianceScene& s, std::size_t t, const CameraParams& p, int camera, std::uint64_t seed) {
  Rng rng = derive_stream(seed, static_cast<std::uint64_t>(camera), t);
  return render_frame(s, t, p, CameraModel{}, rng, camera);
}

/// Dataset whose frame (t, camera) uses params_for(t, camera).
template <typename ParamsFor>
CollectedDataset build_dataset(const RadianceScene& s, std::size_t length, ParamsFor params_for) {
  CollectedDataset d;
  for (std::size_t t = 0; t < length; ++t) {
    CollectedRecord r;
    r.reference = render(s, t, params_for(t, 1), 1, 17);
    r.perturbed = render(s, t, params_for(t, 2), 2, 17);
    r.quadrant_index = static_cast<int>(t % 4);
    d.records.push_back(std::move(r));
  }
  return d;
}

FeatChoice brute_force_feat(const WindowScores& w) {
  int best = -1;
  FeatChoice choice;
  for (int a = 1; a <= 4; ++a) {
    for (int i = 1; i <= 2; ++i) {
      if (w.feat[a - 1][i - 1] > best) {
        best = w.feat[a - 1][i - 1];
        choice = {a, i};
      }
    }
  }
  return choice;
}

MatchChoice brute_force_match(const WindowScores& w) {
  int best = -1;
  MatchChoice choice;
  for (int b = 0; b < 4; ++b) {
    for (int i = 1; i <= 2; ++i) {
      for (int j = 1; j <= 2; ++j) {
        if (w.match[b][i - 1][j - 1] > best) {
          best = w.match[b][i - 1][j - 1];
          choice = {b, i, j};
        }
      }
    }
  }
  return choice;
}

}  // namespace

TEST(Selection, TiesGoToEarliestOffsetAndFirstCamera) {
  const WindowScores flat{};
  const FeatChoice f = select_feat(flat);
  EXPECT_EQ(f.offset, 1);
  EXPECT_EQ(f.camera, 1);
  const MatchChoice m = select_match(flat);
  EXPECT_EQ(m.offset, 0);
  EXPECT_EQ(m.camera_from, 1);
  EXPECT_EQ(m.camera_to, 1);

  WindowScores w{};
  w.feat[2][1] = 5;
  w.feat[3][0] = 5;
  EXPECT_EQ(select_feat(w).offset, 3);
  EXPECT_EQ(select_feat(w).camera, 2);
  w.match[1][1][0] = 9;
  w.match[1][1][1] = 9;
  w.match[2][0][0] = 9;
  const MatchChoice mc = select_match(w);
  EXPECT_EQ(mc.offset, 1);
  EXPECT_EQ(mc.camera_from, 2);
  EXPECT_EQ(mc.camera_to, 1);
}

TEST(Selection, MatchesExhaustiveEnumerationOnRandomWindows) {
  Rng rng(123);
  for (int trial = 0; trial < 5000; ++trial) {
    WindowScores w;
    const int range = 1 + static_cast<int>(rng() % 6);  // small ranges force ties
    for (auto& row : w.feat) {
      for (int& v : row) v = static_cast<int>(rng() % range);
    }
    for (auto& b : w.match) {
      for (auto& row : b) {
        for (int& v : row) v = static_cast<int>(rng() % range);
      }
    }
    const FeatChoice f = select_feat(w), fb = brute_force_feat(w);
    ASSERT_EQ(f.offset, fb.offset);
    ASSERT_EQ(f.camera, fb.camera);
    const MatchChoice m = select_match(w), mb = brute_force_match(w);
    ASSERT_EQ(m.offset, mb.offset);
    ASSERT_EQ(m.camera_from, mb.camera_from);
    ASSERT_EQ(m.camera_to, mb.camera_to);
  }
}

TEST(LabelFeat, SingleWellExposedImageWins) {
  const RadianceScene s = test::small_scene(21);
  const CameraParams good = metered_params(s, 3, CameraModel{});
  const CollectedDataset d = build_dataset(s, 5, [&](std::size_t t, int cam) {
    return (t == 3 && cam == 2) ? good : kSaturating;
  });
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  ASSERT_GT(table.feat(3, 2), 0);
  const auto label = label_feat(d, table, 0);
  ASSERT_TRUE(label.has_value());
  EXPECT_EQ(*label, good);
}

TEST(LabelFeat, IdenticalImagesResolveToFirstFutureReferenceFrame) {
  const RadianceScene s = test::small_scene(22);
  const Frame base = render(s, 0, CameraParams(5.0, 2e-3), 1, 1);
  CollectedDataset d;
  for (std::size_t t = 0; t < 5; ++t) {
    CollectedRecord r;
    r.reference = base;
    r.perturbed = base;
    r.reference.params = CameraParams(1.0 + t, 1e-3);
    r.perturbed.params = CameraParams(20.0 + t, 5e-3);
    d.records.push_back(r);
  }
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  EXPECT_EQ(*label_feat(d, table, 0), d.frame(1, 1).params);
  // Every pair is identical, so the first pair's second image wins.
  EXPECT_EQ(*label_match(d, table, 0), d.frame(1, 1).params);
}

TEST(LabelMatch, SingleWellExposedPairWins) {
  const RadianceScene s = test::small_scene(23);
  const CameraModel model;
  // Only (I^2_2, I^1_3) has both images well exposed.
  const CollectedDataset d = build_dataset(s, 5, [&](std::size_t t, int cam) {
    if ((t == 2 && cam == 2) || (t == 3 && cam == 1)) return metered_params(s, t, model);
    return kSaturating;
  });
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  ASSERT_GT(table.match(2, 2, 1), 0);
  EXPECT_EQ(select_match(table.window(0)).offset, 2);
  EXPECT_EQ(*label_match(d, table, 0), d.frame(3, 1).params);
}

TEST(Labels, AgreeWithMetricsComputedDirectly) {
  const RadianceScene s = test::small_scene(24);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(s, reactive, CameraModel{}, 31);
  const FeatureExtractor fx;
  const MatcherConfig mc;
  const MetricTable table(d, fx, mc);
  for (std::size_t t = 0; t + 4 < d.size(); t += 3) {
    int best_feat = -1, best_match = -1;
    CameraParams feat_params, match_params;
    for (int a = 1; a <= 4; ++a) {
      for (int i = 1; i <= 2; ++i) {
        const int v = fx.m_feat(d.frame(t + a, i));
        if (v > best_feat) {
          best_feat = v;
          feat_params = d.frame(t + a, i).params;
        }
      }
    }
    for (int b = 0; b < 4; ++b) {
      for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
          const int v = m_match(fx.detect(d.frame(t + b, i)), fx.detect(d.frame(t + b + 1, j)), mc);
          if (v > best_match) {
            best_match = v;
            match_params = d.frame(t + b + 1, j).params;
          }
        }
      }
    }
    EXPECT_EQ(*label_feat(d, table, t), feat_params) << t;
    EXPECT_EQ(*label_match(d, table, t), match_params) << t;
  }
}

TEST(Labels, TruncatedWindowsAreSkipped) {
  const RadianceScene s = test::small_scene(25);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(s, reactive, CameraModel{}, 1);
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  const std::size_t T = d.size();
  EXPECT_TRUE(has_future_window(d, T - 5));
  EXPECT_FALSE(has_future_window(d, T - 4));
  EXPECT_FALSE(label_feat(d, table, T - 4).has_value());
  EXPECT_FALSE(label_match(d, table, T - 1).has_value());
  EXPECT_FALSE(label_hybrid(d, table, T - 2, 0.5).has_value());
}

TEST(Hybrid, MidpointArithmetic) {
  const NormalizedParams n = blend_labels(CameraParams(10.0, 2e-3), CameraParams(20.0, 4e-3), 0.5);
  const CameraParams p = denormalize(n);
  EXPECT_NEAR(p.gain_db(), 15.0, 1e-12);
  EXPECT_NEAR(p.exposure_s(), 3e-3, 1e-15);
}

TEST(Hybrid, EndpointsAreExact) {
  const CameraParams f(7.3, 2.2e-3), m(19.1, 11e-3);
  EXPECT_EQ(blend_labels(f, m, 1.0), normalize(f));
  EXPECT_EQ(blend_labels(f, m, 0.0), normalize(m));
  EXPECT_THROW(blend_labels(f, m, 1.5), InvalidArgument);
  EXPECT_THROW(blend_labels(f, m, -0.1), InvalidArgument);
}

TEST(Hybrid, ConvexCombinationOfFeatAndMatchLabels) {
  const RadianceScene s = test::small_scene(26);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(s, reactive, CameraModel{}, 5);
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  for (std::size_t t = 0; t + 4 < d.size(); t += 5) {
    const NormalizedParams f = normalize(*label_feat(d, table, t));
    const NormalizedParams m = normalize(*label_match(d, table, t));
    EXPECT_EQ(*label_hybrid(d, table, t, 1.0), f);
    EXPECT_EQ(*label_hybrid(d, table, t, 0.0), m);
    const NormalizedParams h = *label_hybrid(d, table, t, 0.3);
    EXPECT_NEAR(h.gain, 0.3 * f.gain + 0.7 * m.gain, 1e-12);
    EXPECT_NEAR(h.exposure, 0.3 * f.exposure + 0.7 * m.exposure, 1e-12);
  }
  EXPECT_THROW(label_hybrid(d, table, 0, 2.0), InvalidArgument);
}

TEST(TrainingSet, EightSamplesPerLabelableStep) {
  const RadianceScene s = test::small_scene(27);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(s, reactive, CameraModel{}, 8);
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  // Enumerate t with two steps of history and four of future.
  std::size_t labelable = 0;
  for (std::size_t t = 0; t < d.size(); ++t) labelable += (t >= 2 && t + 4 <= d.size() - 1) ? 1 : 0;
  const auto samples = build_training_set(d, table, LabelMetric::hybrid, 0.5, 4);
  EXPECT_EQ(samples.size(), 8 * labelable);
  EXPECT_EQ(samples.size(), 8 * (d.size() - 6));
  for (const auto& smp : samples) {
    EXPECT_GE(smp.target.gain, 0.0);
    EXPECT_LE(smp.target.gain, 1.0);
    EXPECT_GE(smp.target.exposure, 0.0);
    EXPECT_LE(smp.target.exposure, 1.0);
    EXPECT_EQ(smp.episode, 4u);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(smp.frames[k].time_index, smp.time_index - 2 + k);
      EXPECT_EQ(smp.params[k], d.frame(smp.frames[k].time_index, smp.frames[k].camera_id).params);
    }
  }
  // The eight combinations at one timestep are distinct and share a target.
  for (int c = 1; c < 8; ++c) {
    EXPECT_EQ(samples[c].time_index, samples[0].time_index);
    EXPECT_EQ(samples[c].target, samples[0].target);
    for (int k = 0; k < c; ++k) EXPECT_NE(samples[c].frames, samples[k].frames);
  }
}

TEST(TrainingSet, LabelsComeFromAppliedParams) {
  const RadianceScene s = test::small_scene(28);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(s, reactive, CameraModel{}, 9);
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  for (LabelMetric metric : {LabelMetric::feat, LabelMetric::match}) {
    for (const auto& smp : build_training_set(d, table, metric, 0.5)) {
      bool found = false;
      for (std::size_t t = smp.time_index; t <= smp.time_index + 4 && !found; ++t) {
        for (int cam : {1, 2}) found = found || normalize(d.frame(t, cam).params) == smp.target;
      }
      ASSERT_TRUE(found) << to_string(metric) << " t=" << smp.time_index;
    }
  }
}

TEST(TrainingSet, RejectsShortEpisodesAndBadWeights) {
  const RadianceScene s = test::small_scene(29);
  const CollectedDataset d = build_dataset(s, 6, [](std::size_t, int) { return CameraParams(5.0, 1e-3); });
  const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
  EXPECT_THROW(build_training_set(d, table, LabelMetric::feat, 0.5), InvalidArgument);
  const CollectedDataset d7 = build_dataset(s, 7, [](std::size_t, int) { return CameraParams(5.0, 1e-3); });
  const MetricTable t7(d7, FeatureExtractor{}, MatcherConfig{});
  EXPECT_EQ(build_training_set(d7, t7, LabelMetric::feat, 0.5).size(), 8u);
  EXPECT_THROW(build_training_set(d7, t7, LabelMetric::hybrid, 1.5), InvalidArgument);
  EXPECT_THROW(build_training_set(d7, table, LabelMetric::feat, 0.5), InvalidArgument);
}

TEST(Plausibility, DarkWindowsFavourBrighterSettings) {
  // Reference is held underexposed; the feature label should ask for more light.
  int brighter = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const RadianceScene s = test::small_scene(40 + seed, 0.0);
    const CameraParams metered = metered_params(s, 0, CameraModel{});
    const CameraParams dark = params_from_product(metered.exposure_gain_product() / 8.0);
    FixedController fixed(dark);
    const CollectedDataset d = collect_episode(s, fixed, CameraModel{}, seed, dark);
    const MetricTable table(d, FeatureExtractor{}, MatcherConfig{});
    for (std::size_t t = 0; t + 4 < d.size(); ++t) {
      const CameraParams label = *label_feat(d, table, t);
      brighter += label.exposure_gain_product() >= dark.exposure_gain_product() ? 1 : 0;
      ++total;
    }
  }
  EXPECT_GE(brighter, 0.8 * total) << brighter << "/" << total;
}

TEST(LabelMetricNames, RoundTrip) {
  for (LabelMetric m : {LabelMetric::feat, LabelMetric::match, LabelMetric::hybrid}) {
    EXPECT_EQ(parse_label_metric(to_string(m)), m);
  }
  EXPECT_THROW(parse_label_metric("best"), InvalidArgument);
}
