#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "camctl/camera.hpp"

namespace camctl {

inline constexpr int kInputChannels = 15;
inline constexpr int kHistoryFrames = 3;

enum class Mode { train, eval };

enum class DropoutScope { fc, all };

/// Architecture: 4 x (conv -> BN -> ReLU -> 2x2 max-pool, ceil mode), then
/// 2 hidden FC layers (BN -> ReLU -> dropout) and a linear 2-unit output.
struct NetworkConfig {
  int input_size = 64;  // square input, H = W
  std::array<int, 4> conv_widths = {16, 32, 64, 64};
  std::array<int, 2> fc_widths = {64, 32};
  int kernel_size = 3;
  double dropout = 0.4;
  DropoutScope dropout_scope = DropoutScope::fc;
  double epsilon = 0.5;  // gain weight in the loss
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  void validate() const;
  /// Spatial size after `blocks` pooling stages.
  int pooled_size(int blocks) const;
  /// Input width of the first FC layer.
  int flatten_size() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// Mean absolute error, gain weighted by epsilon and exposure by 1 - epsilon.
/// Predictions and targets are 2 x N (row 0 gain, row 1 exposure).
template <typename Scalar>
Scalar l1_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& predictions,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& targets, double epsilon);

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> l1_loss_gradient(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& predictions,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& targets, double epsilon);

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

/// Forward caches for one batch; produced by forward(), consumed by backward().
template <typename Scalar>
struct Workspace {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  struct Layer {
    Matrix input;       // conv: cols; fc: input activations
    Matrix normalized;  // x-hat
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> batch_mean;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> batch_var;
    Matrix activated;   // after BN + ReLU
    Matrix dropout_mask;
    std::vector<int> pool_argmax;
    int height = 0;
    int width = 0;
  };
  std::array<Layer, 6> layers;  // 4 conv + 2 hidden fc
  Matrix output_input;
  int batch = 0;
  Mode mode = Mode::eval;
};

/// Convolutional regressor. Activations use an NHWC column layout: a
/// matrix with one row per channel and one column per (sample, y, x).
template <typename Scalar>
class Network {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit Network(const NetworkConfig& config, std::uint64_t init_seed = 1);

  const NetworkConfig& config() const noexcept { return config_; }

  /// input: 15 x (N*H*W). Returns 2 x N raw outputs. `rng` drives dropout in
  /// train mode and may be null in eval mode.
  Matrix forward(const Matrix& input, int batch, Mode mode, Rng* rng, Workspace<Scalar>& ws) const;

  /// Accumulates parameter gradients into `grads` (same layout as params()).
  /// Returns d(loss)/d(input) when `input_gradient` is set, else an empty matrix.
  Matrix backward(const Workspace<Scalar>& ws, const Matrix& d_output, std::vector<Matrix>& grads,
                  bool input_gradient = false) const;

  /// Folds the batch statistics of a train-mode forward into the running averages.
  void update_running_stats(const Workspace<Scalar>& ws);

  std::vector<Matrix>& params() noexcept { return params_; }
  const std::vector<Matrix>& params() const noexcept { return params_; }
  const std::vector<Matrix>& buffers() const noexcept { return buffers_; }
  std::vector<Matrix> zero_gradients() const;

  std::vector<NamedTensor> export_tensors() const;
  void import_tensors(const std::vector<NamedTensor>& tensors);

  template <typename Other>
  Network<Other> cast() const;

 private:
  template <typename>
  friend class Network;

  // params_: per hidden layer {W, gamma, beta} (6 layers), then W_out, b_out.
  // buffers_: per hidden layer {running_mean, running_var}.
  static constexpr int kHidden = 6;
  int w_index(int layer) const noexcept { return 3 * layer; }
  int gamma_index(int layer) const noexcept { return 3 * layer + 1; }
  int beta_index(int layer) const noexcept { return 3 * layer + 2; }
  int out_w_index() const noexcept { return 3 * kHidden; }
  int out_b_index() const noexcept { return 3 * kHidden + 1; }
  std::vector<std::string> tensor_names() const;

  void batch_norm_forward(int layer, const Matrix& z, Mode mode, typename Workspace<Scalar>::Layer& cache) const;
  Matrix batch_norm_backward(int layer, const typename Workspace<Scalar>::Layer& cache, const Matrix& d_y,
                             std::vector<Matrix>& grads) const;
  bool uses_dropout(int layer) const noexcept;

  NetworkConfig config_;
  std::vector<Matrix> params_;
  std::vector<Matrix> buffers_;
};

extern template class Network<float>;
extern template class Network<double>;

/// Builds one 15 x (H*W) input column block: channels [I_t x3, I_{t-1} x3,
/// I_{t-2} x3, G_t, G_{t-1}, G_{t-2}, E_t, E_{t-1}, E_{t-2}]. `images` and
/// `params` are ordered newest first; images must already be input_size
/// square with values in [0,1]; params are normalized.
void write_network_input(std::span<const ImageF* const, kHistoryFrames> images,
                         std::span<const NormalizedParams, kHistoryFrames> params, int input_size,
                         float* dst);

/// Downsamples a quantized frame to the network resolution in [0,1].
ImageF network_image(const Frame& frame, int input_size);

/// Trained weights plus everything needed to rebuild the network.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;
  NetworkConfig config;
  int round = 1;
  std::vector<NamedTensor> tensors;
};

/// Eval-mode inference wrapper. Thread-safe for concurrent const use.
class Predictor {
 public:
  explicit Predictor(const Checkpoint& checkpoint);

  const NetworkConfig& config() const noexcept { return network_.config(); }

  /// Raw (unclamped) normalized outputs for a history ordered oldest first.
  /// Short histories repeat the earliest frame.
  NormalizedParams raw_output(std::span<const Frame> history) const;

  /// Clamped and denormalized next command.
  CameraParams predict_next(std::span<const Frame> history) const;

 private:
  Network<float> network_;
};

/// Clamp to [0,1]^2 then denormalize.
CameraParams params_from_raw_output(const NormalizedParams& raw);

}  // namespace camctl
