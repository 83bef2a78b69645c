#include <benchmark/benchmark.h>

#include "camctl/evaluation.hpp"
#include "camctl/features.hpp"
#include "camctl/image.hpp"
#include "camctl/labeler.hpp"
#include "camctl/network.hpp"
#include "camctl/sampler.hpp"
#include "camctl/scene_sim.hpp"

using namespace camctl;

namespace {

const RadianceScene& default_scene() {
  static const RadianceScene scene = [] {
    Rng rng(7);
    return make_tunnel_scene(TunnelSceneConfig{}, rng);
  }();
  return scene;
}

Frame metered_frame(std::size_t t, std::uint64_t seed = 1) {
  const CameraModel model;
  Rng rng(seed);
  return render_frame(default_scene(), t, metered_params(default_scene(), t, model), model, rng);
}

void BM_RenderFrame(benchmark::State& state) {
  const CameraModel model;
  const CameraParams p = metered_params(default_scene(), 40, model);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(render_frame(default_scene(), 40, p, model, rng));
}
BENCHMARK(BM_RenderFrame)->Unit(benchmark::kMillisecond);

void BM_DetectFeatures(benchmark::State& state) {
  const FeatureExtractor fx;
  const ImageF img = to_unit_float(metered_frame(40).image, 255);
  for (auto _ : state) benchmark::DoNotOptimize(fx.detect(img));
}
BENCHMARK(BM_DetectFeatures)->Unit(benchmark::kMillisecond);

void BM_MatchAndVerify(benchmark::State& state) {
  const FeatureExtractor fx;
  const MatcherConfig mc;
  const auto a = fx.detect(metered_frame(40, 1));
  const auto b = fx.detect(metered_frame(41, 2));
  for (auto _ : state) benchmark::DoNotOptimize(m_match(a, b, mc));
}
BENCHMARK(BM_MatchAndVerify)->Unit(benchmark::kMillisecond);

void BM_MetricTable(benchmark::State& state) {
  RadianceScene scene = default_scene();
  scene.trajectory.resize(12);
  scene.illumination.resize(12);
  ReactiveAeAgController reactive;
  const CollectedDataset d = collect_episode(scene, reactive, CameraModel{}, 3);
  const FeatureExtractor fx;
  for (auto _ : state) benchmark::DoNotOptimize(MetricTable(d, fx, MatcherConfig{}));
}
BENCHMARK(BM_MetricTable)->Unit(benchmark::kMillisecond);

Eigen::MatrixXf random_batch(const NetworkConfig& c, int batch) {
  Rng rng(5);
  Eigen::MatrixXf x(kInputChannels, batch * c.input_size * c.input_size);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(uniform01(rng));
  return x;
}

NetworkConfig bench_network(int input_size) {
  NetworkConfig c;
  c.input_size = input_size;
  return c;
}

void BM_ForwardEval(benchmark::State& state) {
  const NetworkConfig c = bench_network(static_cast<int>(state.range(0)));
  const Network<float> net(c);
  const auto x = random_batch(c, 1);
  Workspace<float> ws;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, 1, Mode::eval, nullptr, ws));
}
BENCHMARK(BM_ForwardEval)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const NetworkConfig c = bench_network(static_cast<int>(state.range(0)));
  const int batch = 64;
  const Network<float> net(c);
  const auto x = random_batch(c, batch);
  const Eigen::MatrixXf targets = Eigen::MatrixXf::Constant(2, batch, 0.5f);
  Workspace<float> ws;
  Rng rng(9);
  auto grads = net.zero_gradients();
  for (auto _ : state) {
    const Eigen::MatrixXf out = net.forward(x, batch, Mode::train, &rng, ws);
    net.backward(ws, l1_loss_gradient<float>(out, targets, c.epsilon), grads, false);
    benchmark::DoNotOptimize(grads.front().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
