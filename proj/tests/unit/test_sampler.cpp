#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "camctl/network.hpp"
#include "camctl/sampler.hpp"
#include "helpers.hpp"

using namespace camctl;

namespace {

/// Emits a scripted sequence of commands and remembers what it emitted.
class ScriptedController final : public Controller {
 public:
  explicit ScriptedController(std::vector<CameraParams> script) : script_(std::move(script)) {}
  std::string identity() const override { return "scripted"; }
  ControllerCommand step(std::span<const Frame>) override {
    const CameraParams p = script_[emitted_.size() % script_.size()];
    emitted_.push_back(p);
    return {p, identity()};
  }
  std::unique_ptr<Controller> clone() const override { return std::make_unique<ScriptedController>(*this); }
  const std::vector<CameraParams>& emitted() const { return emitted_; }

 private:
  std::vector<CameraParams> script_;
  std::vector<CameraParams> emitted_;
};

Checkpoint tiny_checkpoint() {
  NetworkConfig c;
  c.input_size = 16;
  c.conv_widths = {2, 2, 2, 2};
  c.fc_widths = {4, 4};
  const Network<float> net(c, 3);
  return Checkpoint{c, 1, net.export_tensors()};
}

}  // namespace

TEST(Perturbation, UpperEndpointOfPositiveQuadrant) {
  const CameraParams p = apply_perturbation(CameraParams(10.0, 1e-3), quadrant_signs(0), {0.5, 0.5, 1.0});
  EXPECT_DOUBLE_EQ(p.gain_db(), 15.0);
  EXPECT_DOUBLE_EQ(p.exposure_s(), 1.5e-3);
}

TEST(Perturbation, ZeroGainNegativeQuadrantKeepsGainAtZero) {
  const CameraParams p = apply_perturbation(CameraParams(0.0, 1e-3), quadrant_signs(3), {0.3, 0.2, 2.0});
  EXPECT_EQ(p.gain_db(), 0.0);
  EXPECT_DOUBLE_EQ(p.exposure_s(), 0.8e-3);
}

TEST(Perturbation, ZeroGainPositiveQuadrantAddsStep) {
  const CameraParams p = apply_perturbation(CameraParams(0.0, 1e-3), quadrant_signs(1), {0.3, 0.2, 2.5});
  EXPECT_DOUBLE_EQ(p.gain_db(), 2.5);
  EXPECT_DOUBLE_EQ(p.exposure_s(), 0.8e-3);
}

TEST(Perturbation, OutputAlwaysWithinLegalRanges) {
  PerturbationState state{0, Rng(4)};
  Rng pick(5);
  for (int i = 0; i < 2000; ++i) {
    const CameraParams ref(30.0 * uniform01(pick), kMinExposureS + (kMaxExposureS - kMinExposureS) * uniform01(pick));
    const CameraParams p = perturb_params(ref, state);
    ASSERT_GE(p.gain_db(), kMinGainDb);
    ASSERT_LE(p.gain_db(), kMaxGainDb);
    ASSERT_GE(p.exposure_s(), kMinExposureS);
    ASSERT_LE(p.exposure_s(), kMaxExposureS);
  }
}

TEST(Perturbation, QuadrantsCycleEveryFourDraws) {
  const SignPair expected[4] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (int q = 0; q < 12; ++q) EXPECT_EQ(quadrant_signs(q), expected[q % 4]);
  PerturbationState state{0, Rng(1)};
  const CameraParams ref(10.0, 5e-3);
  for (int i = 0; i < 12; ++i) {
    const SignPair s = expected[i % 4];
    const CameraParams p = perturb_params(ref, state);
    EXPECT_EQ(p.gain_db() >= ref.gain_db(), s.gain > 0);
    EXPECT_EQ(p.exposure_s() >= ref.exposure_s(), s.exposure > 0);
    EXPECT_EQ(state.quadrant_index, (i + 1) % 4);
  }
}

TEST(Perturbation, DrawsAreUniformOnHalfInterval) {
  // Invert the perturbation at an interior reference to recover u_g and u_e.
  const CameraParams ref(10.0, 1e-3);
  PerturbationState state{0, Rng(77)};
  std::vector<double> ug, ue;
  for (int i = 0; i < 2000; ++i) {
    state.quadrant_index = 0;
    const CameraParams p = perturb_params(ref, state);
    ug.push_back(p.gain_db() / ref.gain_db() - 1.0);
    ue.push_back(p.exposure_s() / ref.exposure_s() - 1.0);
  }
  auto ks = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double d = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double cdf = std::clamp(v[i] / kMaxPerturbation, 0.0, 1.0);
      d = std::max({d, std::abs((i + 1) / n - cdf), std::abs(cdf - i / n)});
    }
    return d;
  };
  const double critical = 1.95 / std::sqrt(2000.0);  // alpha = 0.001
  EXPECT_LT(ks(ug), critical);
  EXPECT_LT(ks(ue), critical);
  EXPECT_GE(*std::min_element(ug.begin(), ug.end()), 0.0);
  EXPECT_LE(*std::max_element(ug.begin(), ug.end()), kMaxPerturbation + 1e-12);
}

TEST(Collect, RecordCountAndFramePairing) {
  const RadianceScene s = test::small_scene(2);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(s, reactive, CameraModel{}, 11);
  ASSERT_EQ(d.size(), s.length());
  for (std::size_t t = 0; t < d.size(); ++t) {
    EXPECT_EQ(d.records[t].reference.time_index, static_cast<std::int64_t>(t));
    EXPECT_EQ(d.records[t].perturbed.time_index, static_cast<std::int64_t>(t));
    EXPECT_EQ(d.frame(t, 1).camera_id, 1);
    EXPECT_EQ(d.frame(t, 2).camera_id, 2);
    EXPECT_EQ(d.records[t].quadrant_index, static_cast<int>(t % 4));
  }
  EXPECT_EQ(d.controller_identity, "reactive_ae_ag");
  EXPECT_EQ(d.scene_hash, scene_fingerprint(s));
}

TEST(Collect, ReferenceFramesUseControllerCommands) {
  const RadianceScene s = test::small_scene(3);
  ScriptedController ctrl({CameraParams(3.0, 2e-3), CameraParams(12.0, 7e-3), CameraParams(0.0, 1e-4)});
  const CameraParams initial(5.0, 4e-3);
  const CollectedDataset d = collect_episode(s, ctrl, CameraModel{}, 4, initial);
  EXPECT_EQ(d.frame(0, 1).params, initial);
  for (std::size_t t = 1; t < d.size(); ++t) EXPECT_EQ(d.frame(t, 1).params, ctrl.emitted()[t - 1]);
}

TEST(Collect, PerturbedFramesFollowCommandedSigns) {
  const RadianceScene s = test::small_scene(3);
  ScriptedController ctrl({CameraParams(12.0, 7e-3)});
  const CollectedDataset d = collect_episode(s, ctrl, CameraModel{}, 4, CameraParams(12.0, 7e-3));
  for (std::size_t t = 0; t < d.size(); ++t) {
    const SignPair sign = quadrant_signs(d.records[t].quadrant_index);
    const CameraParams& ref = d.frame(t, 1).params;
    const CameraParams& p = d.frame(t, 2).params;
    EXPECT_EQ(p.gain_db() >= ref.gain_db(), sign.gain > 0) << t;
    EXPECT_EQ(p.exposure_s() >= ref.exposure_s(), sign.exposure > 0) << t;
  }
}

TEST(Collect, DeterministicForSameSeed) {
  const RadianceScene s = test::small_scene(5);
  ReactiveAeAgController a, b;
  const CollectedDataset x = collect_episode(s, a, CameraModel{}, 9);
  const CollectedDataset y = collect_episode(s, b, CameraModel{}, 9);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (int cam : {1, 2}) {
      EXPECT_EQ(x.frame(t, cam).image, y.frame(t, cam).image);
      EXPECT_EQ(x.frame(t, cam).params, y.frame(t, cam).params);
    }
  }
  ReactiveAeAgController c;
  const CollectedDataset z = collect_episode(s, c, CameraModel{}, 10);
  EXPECT_NE(x.frame(0, 2).params, z.frame(0, 2).params);
}

TEST(Collect, NonFiniteCommandAborts) {
  const RadianceScene s = test::small_scene(1);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ScriptedController ctrl({CameraParams(5.0, 1e-3), CameraParams(nan, 1e-3)});
  try {
    collect_episode(s, ctrl, CameraModel{}, 1);
    FAIL() << "expected ControllerFault";
  } catch (const ControllerFault& e) {
    EXPECT_NE(std::string(e.what()).find("scripted"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("t=1"), std::string::npos);
  }
}

TEST(IterativeCollection, RoundOneUsesReactiveReference) {
  EXPECT_EQ(reference_controller_for_round(1, nullptr)->identity(), "reactive_ae_ag");
  const CollectedDataset d = iterative_collection(1, nullptr, test::small_scene(1), CameraModel{}, 3);
  EXPECT_EQ(d.round, 1);
  EXPECT_FALSE(d.diminishing_returns);
}

TEST(IterativeCollection, RoundTwoRequiresCheckpoint) {
  EXPECT_THROW(reference_controller_for_round(2, nullptr), InvalidArgument);
  EXPECT_THROW(iterative_collection(2, nullptr, test::small_scene(1), CameraModel{}, 3), InvalidArgument);
  EXPECT_THROW(reference_controller_for_round(0, nullptr), InvalidArgument);
}

TEST(IterativeCollection, RoundTwoUsesLearnedReference) {
  const Checkpoint ck = tiny_checkpoint();
  EXPECT_EQ(reference_controller_for_round(2, &ck)->identity(), "learned");
  const CollectedDataset d = iterative_collection(2, &ck, test::small_scene(1), CameraModel{}, 3);
  EXPECT_EQ(d.controller_identity, "learned");
  EXPECT_EQ(d.round, 2);
  EXPECT_FALSE(d.diminishing_returns);
}

TEST(IterativeCollection, LaterRoundsAreFlagged) {
  const Checkpoint ck = tiny_checkpoint();
  const CollectedDataset d = iterative_collection(3, &ck, test::small_scene(1), CameraModel{}, 3);
  EXPECT_EQ(d.round, 3);
  EXPECT_TRUE(d.diminishing_returns);
}
