#include "camctl/sampler.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "camctl/network.hpp"

namespace camctl {

SignPair quadrant_signs(int quadrant_index) {
  switch (((quadrant_index % 4) + 4) % 4) {
    case 0: return {1, 1};
    case 1: return {1, -1};
    case 2: return {-1, 1};
    default: return {-1, -1};
  }
}

CameraParams apply_perturbation(const CameraParams& reference, SignPair signs, const PerturbationDraw& draw) {
  double gain = reference.gain_db();
  if (gain == 0.0) {
    gain = signs.gain > 0 ? draw.additive_gain_db : 0.0;
  } else {
    gain *= 1.0 + signs.gain * draw.u_gain;
  }
  const double exposure = reference.exposure_s() * (1.0 + signs.exposure * draw.u_exposure);
  return {gain, exposure};
}

CameraParams perturb_params(const CameraParams& reference, PerturbationState& state) {
  PerturbationDraw draw;
  draw.u_gain = kMaxPerturbation * uniform01(state.rng);
  draw.u_exposure = kMaxPerturbation * uniform01(state.rng);
  draw.additive_gain_db = kZeroGainStepDb * (1.0 - uniform01(state.rng));  // (0, 3]
  const CameraParams out = apply_perturbation(reference, quadrant_signs(state.quadrant_index), draw);
  state.quadrant_index = (state.quadrant_index + 1) % 4;
  return out;
}

const Frame& CollectedDataset::frame(std::size_t t, int camera_id) const {
  const auto& r = records.at(t);
  return camera_id == 1 ? r.reference : r.perturbed;
}

CollectedDataset collect_episode(const RadianceScene& scene, Controller& reference, const CameraModel& model,
                                 std::uint64_t seed, std::optional<CameraParams> initial) {
  scene.validate();
  model.validate();
  CollectedDataset out;
  out.controller_identity = reference.identity();
  out.seed = seed;
  out.scene_hash = scene_fingerprint(scene);
  out.records.reserve(scene.length());

  PerturbationState perturbation{0, derive_stream(seed, 0x5a3, 0)};
  CameraParams command = initial.value_or(metered_params(scene, 0, model));
  std::deque<Frame> history;
  reference.reset();

  for (std::size_t t = 0; t < scene.length(); ++t) {
    CollectedRecord record;
    record.quadrant_index = perturbation.quadrant_index;
    Rng cam1 = derive_stream(seed, 1, t);
    record.reference = render_frame(scene, t, command, model, cam1, 1);
    const CameraParams perturbed = perturb_params(command, perturbation);
    Rng cam2 = derive_stream(seed, 2, t);
    record.perturbed = render_frame(scene, t, perturbed, model, cam2, 2);

    history.push_back(record.reference);
    if (history.size() > 3) history.pop_front();
    out.records.push_back(std::move(record));

    const std::vector<Frame> window(history.begin(), history.end());
    const ControllerCommand next = reference.step(window);
    if (!next.next.is_finite()) {
      std::ostringstream msg;
      msg << "controller '" << next.identity << "' emitted non-finite params at t=" << t << " (gain_db="
          << next.next.gain_db() << ", exposure_s=" << next.next.exposure_s() << ")";
      throw ControllerFault(msg.str());
    }
    command = next.next;
  }
  return out;
}

std::unique_ptr<Controller> reference_controller_for_round(int round, const Checkpoint* prior,
                                                           const ReactiveConfig& reactive) {
  if (round < 1) throw InvalidArgument("collection round must be >= 1");
  if (round == 1) return std::make_unique<ReactiveAeAgController>(reactive);
  if (prior == nullptr) throw InvalidArgument("collection round >= 2 requires a trained checkpoint");
  return std::make_unique<LearnedController>(std::make_shared<const Predictor>(*prior));
}

CollectedDataset iterative_collection(int round, const Checkpoint* prior, const RadianceScene& scene,
                                      const CameraModel& model, std::uint64_t seed,
                                      const ReactiveConfig& reactive) {
  auto controller = reference_controller_for_round(round, prior, reactive);
  CollectedDataset data = collect_episode(scene, *controller, model, seed);
  data.round = round;
  data.diminishing_returns = round > 2;
  return data;
}

}  // namespace camctl
