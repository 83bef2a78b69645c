#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "camctl/features.hpp"
#include "camctl/scene_sim.hpp"
#include "helpers.hpp"

using namespace camctl;
using camctl::test::noiseless_model;
using camctl::test::small_scene;
using camctl::test::uniform_scene;

TEST(TunnelScene, ZeroAttenuationGivesConstantProfile) {
  const RadianceScene s = small_scene(1, 0.0);
  for (double v : s.illumination) EXPECT_EQ(v, s.illumination.front());
}

TEST(TunnelScene, SixtyDbSpansThreeDecades) {
  TunnelSceneConfig c;  // full-length default, so the plateau is reached
  c.field_size = 512;
  Rng rng(2);
  const RadianceScene s = make_tunnel_scene(c, rng);
  const auto [lo, hi] = std::minmax_element(s.illumination.begin(), s.illumination.end());
  EXPECT_NEAR(*hi / *lo, 1000.0, 10.0);
  EXPECT_EQ(s.length(), 400u);
}

TEST(TunnelScene, SupportsOneHundredTwentyDb) {
  TunnelSceneConfig c = test::small_scene_config();
  c.attenuation_db = 120.0;
  c.tunnel_frames = 60;
  Rng rng(2);
  const RadianceScene s = make_tunnel_scene(c, rng);
  const auto [lo, hi] = std::minmax_element(s.illumination.begin(), s.illumination.end());
  EXPECT_NEAR(*hi / *lo, 1e6, 1e4);
}

TEST(TunnelScene, DeterministicForSameSeed) {
  const RadianceScene a = small_scene(5);
  const RadianceScene b = small_scene(5);
  EXPECT_EQ(a.radiance, b.radiance);
  EXPECT_EQ(a.illumination, b.illumination);
  EXPECT_EQ(scene_fingerprint(a), scene_fingerprint(b));
  EXPECT_NE(scene_fingerprint(a), scene_fingerprint(small_scene(6)));
}

TEST(TunnelScene, ProfileHasStaticEndsAndMonotoneTransitions) {
  const RadianceScene s = small_scene(3);
  const auto& p = s.illumination;
  EXPECT_NEAR(p.front(), p.back(), 1e-3 * p.front());
  const auto mid = p.size() / 2;
  for (std::size_t t = 1; t <= mid; ++t) EXPECT_LE(p[t], p[t - 1] * (1 + 1e-12));
  for (std::size_t t = mid + 1; t < p.size(); ++t) EXPECT_GE(p[t], p[t - 1] * (1 - 1e-12));
  for (float v : s.radiance.pixels()) ASSERT_GE(v, 0.0f);
}

TEST(TunnelScene, RejectsInvalidConfig) {
  TunnelSceneConfig c = test::small_scene_config();
  Rng rng(1);
  c.attenuation_db = -1.0;
  EXPECT_THROW(make_tunnel_scene(c, rng), InvalidArgument);
  c = test::small_scene_config();
  c.tunnel_frames = 0;
  EXPECT_THROW(make_tunnel_scene(c, rng), InvalidArgument);
}

TEST(Render, ZeroRadianceWithoutReadNoiseIsExactlyZero) {
  const RadianceScene s = uniform_scene(0.0f);
  CameraModel m;
  m.read_noise_sigma = 0.0;
  Rng rng(1);
  const Frame f = render_frame(s, 0, CameraParams(30.0, 30e-3), m, rng);
  for (auto v : f.image.pixels()) ASSERT_EQ(v, 0);
}

TEST(Render, ZeroRadianceWithReadNoiseStaysDark) {
  const RadianceScene s = uniform_scene(0.0f);
  CameraModel m;
  Rng rng(1);
  const Frame f = render_frame(s, 0, CameraParams(0.0, 1e-3), m, rng);
  // Read noise of 5e-4 cannot lift a pixel above a handful of codes.
  for (auto v : f.image.pixels()) ASSERT_LE(v, 40);
}

TEST(Render, BrightSceneAtMaximumSettingsSaturates) {
  const RadianceScene s = uniform_scene(1.0f);
  CameraModel m;
  Rng rng(1);
  const Frame f = render_frame(s, 0, CameraParams(30.0, 30e-3), m, rng);
  for (auto v : f.image.pixels()) ASSERT_EQ(v, m.max_code());
}

TEST(Render, BitIdenticalForSameSeed) {
  const RadianceScene s = small_scene(9);
  CameraModel m;
  const CameraParams p(6.0, 2e-3);
  Rng a(42), b(42);
  const Frame fa = render_frame(s, 7, p, m, a, 2);
  const Frame fb = render_frame(s, 7, p, m, b, 2);
  EXPECT_EQ(fa.image, fb.image);
  EXPECT_EQ(fa.camera_id, 2);
  EXPECT_EQ(fa.time_index, 7);
  EXPECT_EQ(fa.image.width(), s.viewport_width);
}

TEST(Render, RejectsOutOfRangeTimeAndNonFiniteParams) {
  const RadianceScene s = small_scene(1);
  CameraModel m;
  Rng rng(1);
  EXPECT_THROW(render_frame(s, s.length(), CameraParams(0.0, 1e-3), m, rng), InvalidArgument);
  EXPECT_THROW(render_frame(s, 0, CameraParams(std::nan(""), 1e-3), m, rng), InvalidArgument);
}

TEST(Render, QuantizationBitsSetCodeRange) {
  const RadianceScene s = uniform_scene(1.0f);
  CameraModel m;
  m.quantization_bits = 12;
  Rng rng(1);
  const Frame f = render_frame(s, 0, CameraParams(30.0, 30e-3), m, rng);
  EXPECT_EQ(f.max_code, 4095);
  EXPECT_EQ(f.image.pixels()[0], 4095);
}

TEST(Physics, MonotoneInExposureAndGainWithoutNoise) {
  const RadianceScene s = small_scene(4);
  const CameraModel m = noiseless_model(true);
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t t = static_cast<std::size_t>(rng() % s.length());
    const double g = 25.0 * uniform01(rng);
    const double e = 1e-4 + 0.02 * uniform01(rng);
    const ImageF base = exposure_signal(s, t, CameraParams(g, e), m);
    const ImageF more_e = exposure_signal(s, t, CameraParams(g, e * 1.3), m);
    const ImageF more_g = exposure_signal(s, t, CameraParams(g + 2.0, e), m);
    for (std::size_t i = 0; i < base.size(); ++i) {
      ASSERT_GE(more_e.pixels()[i], base.pixels()[i]);
      ASSERT_GE(more_g.pixels()[i], base.pixels()[i]);
    }
  }
}

TEST(Physics, DoublingExposureEqualsDoublingGain) {
  const RadianceScene s = small_scene(4);
  const CameraModel m = noiseless_model(false);
  const CameraParams base(6.0, 2e-3);
  const CameraParams longer(6.0, 4e-3);
  const CameraParams louder(base.gain_db() + 20.0 * std::log10(2.0), 2e-3);
  Rng r1(1), r2(1);
  EXPECT_EQ(render_frame(s, 3, longer, m, r1).image, render_frame(s, 3, louder, m, r2).image);
}

TEST(Physics, BlurReducesGradientEnergyAsExposureGrows) {
  // Fixed exposure*gain product so only the blur length changes.
  const CameraModel m = noiseless_model(true);
  int violations = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const RadianceScene s = small_scene(seed);
    const double product = 1e-3 * gain_db_to_linear(30.0);
    double previous = std::numeric_limits<double>::infinity();
    for (double e : {1e-3, 4e-3, 10e-3, 20e-3, 30e-3}) {
      const CameraParams p(gain_linear_to_db(product / e), e);
      const ImageF x = exposure_signal(s, 2, p, m);
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (int y = 1; y < x.height() - 1; ++y) {
        for (int xx = 1; xx < x.width() - 1; ++xx) {
          const double gx = x(xx + 1, y) - x(xx - 1, y);
          const double gy = x(xx, y + 1) - x(xx, y - 1);
          const double mag = std::sqrt(gx * gx + gy * gy);
          sum += mag;
          sum2 += mag * mag;
          ++n;
        }
      }
      const double var = sum2 / n - (sum / n) * (sum / n);
      if (var > previous * (1 + 1e-9)) ++violations;
      previous = var;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(Metering, HitsTargetMean) {
  const RadianceScene s = small_scene(2);
  const CameraModel m;
  for (std::size_t t : {std::size_t{0}, s.length() / 2}) {
    const CameraParams p = metered_params(s, t, m);
    Rng rng(3);
    const Frame f = render_frame(s, t, p, m, rng);
    EXPECT_NEAR(mean_value(to_unit_float(f.image, f.max_code)), 0.45, 0.03);
  }
}

TEST(Transitions, FlatProfileHasNone) {
  const auto flags = transition_frames(small_scene(1, 0.0));
  EXPECT_TRUE(std::none_of(flags.begin(), flags.end(), [](bool b) { return b; }));
  const auto tunnel = transition_frames(small_scene(1));
  EXPECT_TRUE(std::any_of(tunnel.begin(), tunnel.end(), [](bool b) { return b; }));
}

TEST(Features, WellExposedRenderHasMoreFeaturesThanSaturated) {
  const RadianceScene s = small_scene(11);
  const CameraModel m;
  const FeatureExtractor fx;
  Rng r1(1), r2(1);
  const Frame good = render_frame(s, 0, metered_params(s, 0, m), m, r1);
  const Frame blown = render_frame(s, 0, CameraParams(30.0, 30e-3), m, r2);
  EXPECT_GT(fx.m_feat(good), fx.m_feat(blown));
  EXPECT_EQ(fx.m_feat(blown), 0);
}
