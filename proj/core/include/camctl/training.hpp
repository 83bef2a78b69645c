#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "camctl/labeler.hpp"
#include "camctl/network.hpp"

namespace camctl {

/// Network-resolution images for a set of episodes plus the labelled items
/// that index into them.
class TrainingSet {
 public:
  struct Item {
    std::array<int, kHistoryFrames> images{};  // newest first
    std::array<NormalizedParams, kHistoryFrames> params{};  // newest first
    NormalizedParams target;
    int group = 0;  // episode id used for the held-out split
  };

  explicit TrainingSet(int input_size) : input_size_(input_size) {}

  int input_size() const noexcept { return input_size_; }
  const std::vector<Item>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  const ImageF& image(int index) const { return images_.at(static_cast<std::size_t>(index)); }

  /// Downsamples every frame of `dataset` once and appends one item per sample.
  void add_episode(const CollectedDataset& dataset, const std::vector<LabeledSample>& samples, int group);

  /// Appends a single item with caller-provided images (newest first).
  void add_item(const std::array<ImageF, kHistoryFrames>& images,
                const std::array<NormalizedParams, kHistoryFrames>& params, NormalizedParams target, int group);

  /// Writes items[indices] as one 15 x (N*S*S) input block and 2 x N targets.
  void gather(std::span<const std::size_t> indices, Eigen::MatrixXf& input, Eigen::MatrixXf& targets) const;

 private:
  int input_size_;
  std::vector<ImageF> images_;
  std::vector<Item> items_;
};

struct TrainHyper {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double holdout_fraction = 0.1;  // by episode group

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;  // NaN when there is no held-out group
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> curve;
  std::vector<int> holdout_groups;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Groups held out for validation: round(fraction * groups), at least one
/// when there are two or more groups, chosen by a seeded shuffle.
std::vector<int> holdout_groups(const TrainingSet& set, double fraction, std::uint64_t seed);

/// Adam on the weighted L1 loss. Batches smaller than 2 are skipped because
/// batch statistics are undefined for them. `warm_start` must share `config`.
TrainResult train(const TrainingSet& set, const NetworkConfig& config, const TrainHyper& hyper,
                  std::uint64_t seed, int round = 1, const Checkpoint* warm_start = nullptr,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Eval-mode loss over the given items.
double evaluate_loss(const Network<float>& network, const TrainingSet& set, std::span<const std::size_t> indices,
                     int batch_size = 64);

/// Adam moments for a parameter list.
template <typename Scalar>
class Adam {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Adam(const std::vector<Matrix>& params, double lr, double beta1, double beta2, double eps);
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);

 private:
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
};

}  // namespace camctl
