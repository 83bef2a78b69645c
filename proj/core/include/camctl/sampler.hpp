#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camctl/camera.hpp"
#include "camctl/controllers.hpp"
#include "camctl/scene_sim.hpp"

namespace camctl {

struct Checkpoint;

/// Signs (+1 / -1) applied to (gain, exposure).
struct SignPair {
  int gain = 1;
  int exposure = 1;
  bool operator==(const SignPair&) const = default;
};

/// Quadrant 0..3 -> (+,+), (+,-), (-,+), (-,-).
SignPair quadrant_signs(int quadrant_index);

struct PerturbationState {
  int quadrant_index = 0;
  Rng rng;
};

struct PerturbationDraw {
  double u_gain = 0.0;          // Uniform[0, 0.5]
  double u_exposure = 0.0;      // Uniform[0, 0.5]
  double additive_gain_db = 0;  // Uniform(0, 3], used only at 0 dB reference gain
};

inline constexpr double kMaxPerturbation = 0.5;
inline constexpr double kZeroGainStepDb = 3.0;

/// Deterministic part of the perturbation: scales gain (dB) by 1 + s_g*u_g
/// and exposure by 1 + s_e*u_e. At 0 dB reference gain the gain instead
/// gets +additive_gain_db for s_g = +1 and stays 0 for s_g = -1.
CameraParams apply_perturbation(const CameraParams& reference, SignPair signs, const PerturbationDraw& draw);

/// Draws u_g, u_e, delta from the state's stream (always three draws),
/// applies the current quadrant and advances it.
CameraParams perturb_params(const CameraParams& reference, PerturbationState& state);

struct CollectedRecord {
  Frame reference;  // camera 1
  Frame perturbed;  // camera 2
  int quadrant_index = 0;
};

struct CollectedDataset {
  std::vector<CollectedRecord> records;
  std::string controller_identity;
  std::uint64_t seed = 0;
  std::uint64_t scene_hash = 0;
  int round = 1;
  bool diminishing_returns = false;  // collected beyond the second round

  std::size_t size() const noexcept { return records.size(); }
  const Frame& frame(std::size_t t, int camera_id) const;
};

/// Raised when a controller emits non-finite parameters.
class ControllerFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dual-camera episode: camera 1 follows the reference controller, camera 2
/// applies quadrant-cycled perturbations of the same command. Camera noise
/// streams are derive_stream(seed, camera_id, t).
CollectedDataset collect_episode(const RadianceScene& scene, Controller& reference, const CameraModel& model,
                                 std::uint64_t seed, std::optional<CameraParams> initial = std::nullopt);

/// Round 1 uses the reactive AE/AG surrogate as reference; round >= 2 uses
/// the learned controller built from `prior`. Rounds beyond 2 are allowed but
/// flagged as diminishing returns.
CollectedDataset iterative_collection(int round, const Checkpoint* prior, const RadianceScene& scene,
                                      const CameraModel& model, std::uint64_t seed,
                                      const ReactiveConfig& reactive = {});

/// Controller used as the reference for the given round.
std::unique_ptr<Controller> reference_controller_for_round(int round, const Checkpoint* prior,
                                                           const ReactiveConfig& reactive = {});

}  // namespace camctl
