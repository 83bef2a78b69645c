#include "camctl/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace camctl {

namespace {

template <typename Matrix>
void im2col(const Matrix& x, int batch, int h, int w, int k, Matrix& cols) {
  const int c = static_cast<int>(x.rows());
  const int pad = k / 2;
  cols.resize(static_cast<Eigen::Index>(k) * k * c, static_cast<Eigen::Index>(batch) * h * w);
  using Scalar = typename Matrix::Scalar;
  for (int n = 0; n < batch; ++n) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        Scalar* dst = cols.data() + (static_cast<Eigen::Index>(n) * h * w + y * w + xx) * cols.rows();
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - pad;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = xx + kx - pad;
            Scalar* tap = dst + (ky * k + kx) * c;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
              std::fill(tap, tap + c, Scalar(0));
            } else {
              const Scalar* src = x.data() + (static_cast<Eigen::Index>(n) * h * w + sy * w + sx) * c;
              std::copy(src, src + c, tap);
            }
          }
        }
      }
    }
  }
}

template <typename Matrix>
Matrix col2im(const Matrix& cols, int channels, int batch, int h, int w, int k) {
  const int pad = k / 2;
  Matrix x = Matrix::Zero(channels, static_cast<Eigen::Index>(batch) * h * w);
  using Scalar = typename Matrix::Scalar;
  for (int n = 0; n < batch; ++n) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const Scalar* src = cols.data() + (static_cast<Eigen::Index>(n) * h * w + y * w + xx) * cols.rows();
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = xx + kx - pad;
            if (sx < 0 || sx >= w) continue;
            Scalar* dst = x.data() + (static_cast<Eigen::Index>(n) * h * w + sy * w + sx) * channels;
            const Scalar* s = src + (ky * k + kx) * channels;
            for (int ch = 0; ch < channels; ++ch) dst[ch] += s[ch];
          }
        }
      }
    }
  }
  return x;
}

template <typename Matrix>
Matrix max_pool(const Matrix& x, int batch, int h, int w, std::vector<int>& argmax) {
  const int c = static_cast<int>(x.rows());
  const int oh = (h + 1) / 2;
  const int ow = (w + 1) / 2;
  Matrix out(c, static_cast<Eigen::Index>(batch) * oh * ow);
  argmax.assign(static_cast<std::size_t>(out.size()), 0);
  for (int n = 0; n < batch; ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index oc = static_cast<Eigen::Index>(n) * oh * ow + oy * ow + ox;
        const int first = n * h * w + (2 * oy) * w + 2 * ox;
        for (int ch = 0; ch < c; ++ch) {
          int best = first;
          auto best_v = x(ch, first);
          for (int dy = 0; dy < 2; ++dy) {
            const int sy = 2 * oy + dy;
            if (sy >= h) continue;
            for (int dx = 0; dx < 2; ++dx) {
              const int sx = 2 * ox + dx;
              if (sx >= w) continue;
              const int idx = n * h * w + sy * w + sx;
              if (x(ch, idx) > best_v) {
                best_v = x(ch, idx);
                best = idx;
              }
            }
          }
          out(ch, oc) = best_v;
          argmax[static_cast<std::size_t>(oc * c + ch)] = best;
        }
      }
    }
  }
  return out;
}

template <typename Matrix>
Matrix max_unpool(const Matrix& d_out, int input_cols, const std::vector<int>& argmax) {
  const int c = static_cast<int>(d_out.rows());
  Matrix d_in = Matrix::Zero(c, input_cols);
  for (Eigen::Index oc = 0; oc < d_out.cols(); ++oc) {
    for (int ch = 0; ch < c; ++ch) {
      d_in(ch, argmax[static_cast<std::size_t>(oc * c + ch)]) += d_out(ch, oc);
    }
  }
  return d_in;
}

}  // namespace

void NetworkConfig::validate() const {
  if (input_size < 1) throw InvalidArgument("input_size must be >= 1");
  for (int c : conv_widths) {
    if (c < 1) throw InvalidArgument("conv widths must be >= 1");
  }
  for (int f : fc_widths) {
    if (f < 1) throw InvalidArgument("fc widths must be >= 1");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) throw InvalidArgument("kernel_size must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must be in [0, 1]");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw InvalidArgument("bn_momentum must be in (0, 1]");
}

int NetworkConfig::pooled_size(int blocks) const {
  int s = input_size;
  for (int i = 0; i < blocks; ++i) s = (s + 1) / 2;
  return s;
}

int NetworkConfig::flatten_size() const {
  const int s = pooled_size(4);
  return conv_widths[3] * s * s;
}

template <typename Scalar>
Scalar l1_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& predictions,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& targets, double epsilon) {
  const auto n = static_cast<Scalar>(predictions.cols());
  const Scalar gain = (predictions.row(0) - targets.row(0)).cwiseAbs().sum() / n;
  const Scalar exposure = (predictions.row(1) - targets.row(1)).cwiseAbs().sum() / n;
  return static_cast<Scalar>(epsilon) * gain + static_cast<Scalar>(1.0 - epsilon) * exposure;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> l1_loss_gradient(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& predictions,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& targets, double epsilon) {
  const auto n = static_cast<Scalar>(predictions.cols());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grad(2, predictions.cols());
  const Scalar w[2] = {static_cast<Scalar>(epsilon) / n, static_cast<Scalar>(1.0 - epsilon) / n};
  for (Eigen::Index i = 0; i < predictions.cols(); ++i) {
    for (int r = 0; r < 2; ++r) {
      const Scalar d = predictions(r, i) - targets(r, i);
      grad(r, i) = d > 0 ? w[r] : (d < 0 ? -w[r] : Scalar(0));
    }
  }
  return grad;
}

template float l1_loss<float>(const Eigen::MatrixXf&, const Eigen::MatrixXf&, double);
template double l1_loss<double>(const Eigen::MatrixXd&, const Eigen::MatrixXd&, double);
template Eigen::MatrixXf l1_loss_gradient<float>(const Eigen::MatrixXf&, const Eigen::MatrixXf&, double);
template Eigen::MatrixXd l1_loss_gradient<double>(const Eigen::MatrixXd&, const Eigen::MatrixXd&, double);

template <typename Scalar>
Network<Scalar>::Network(const NetworkConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  Rng rng(mix_seed(init_seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto he = [&](int rows, int cols, double fan_in, double gain) {
    Matrix m(rows, cols);
    const double std = gain * std::sqrt(2.0 / fan_in);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(std * normal(rng));
    return m;
  };
  const int k2 = config_.kernel_size * config_.kernel_size;
  int in = kInputChannels;
  for (int l = 0; l < 4; ++l) {
    const int out = config_.conv_widths[l];
    params_.push_back(he(out, k2 * in, static_cast<double>(k2 * in), 1.0));
    params_.push_back(Matrix::Ones(out, 1));
    params_.push_back(Matrix::Zero(out, 1));
    buffers_.push_back(Matrix::Zero(out, 1));
    buffers_.push_back(Matrix::Ones(out, 1));
    in = out;
  }
  in = config_.flatten_size();
  for (int j = 0; j < 2; ++j) {
    const int out = config_.fc_widths[j];
    params_.push_back(he(out, in, static_cast<double>(in), 1.0));
    params_.push_back(Matrix::Ones(out, 1));
    params_.push_back(Matrix::Zero(out, 1));
    buffers_.push_back(Matrix::Zero(out, 1));
    buffers_.push_back(Matrix::Ones(out, 1));
    in = out;
  }
  params_.push_back(he(2, in, static_cast<double>(in), 0.1));
  params_.push_back(Matrix::Zero(2, 1));
}

template <typename Scalar>
bool Network<Scalar>::uses_dropout(int layer) const noexcept {
  if (config_.dropout <= 0.0) return false;
  return layer >= 4 || config_.dropout_scope == DropoutScope::all;
}

template <typename Scalar>
void Network<Scalar>::batch_norm_forward(int layer, const Matrix& z, Mode mode,
                                         typename Workspace<Scalar>::Layer& cache) const {
  const Vector& gamma = params_[gamma_index(layer)];
  const Vector& beta = params_[beta_index(layer)];
  const auto eps = static_cast<Scalar>(config_.bn_eps);
  Vector mean, var;
  if (mode == Mode::train) {
    mean = z.rowwise().mean();
    var = (z.colwise() - mean).array().square().rowwise().mean().matrix();
    cache.batch_mean = mean;
    cache.batch_var = var;
  } else {
    mean = buffers_[2 * layer];
    var = buffers_[2 * layer + 1];
  }
  cache.inv_std = (var.array() + eps).rsqrt().matrix();
  cache.normalized = ((z.colwise() - mean).array().colwise() * cache.inv_std.array()).matrix();
  cache.activated =
      ((cache.normalized.array().colwise() * gamma.array()).colwise() + beta.array()).cwiseMax(Scalar(0)).matrix();
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::batch_norm_backward(
    int layer, const typename Workspace<Scalar>::Layer& cache, const Matrix& d_y, std::vector<Matrix>& grads) const {
  const Vector& gamma = params_[gamma_index(layer)];
  const auto m = static_cast<Scalar>(d_y.cols());
  const Vector sum_dy = d_y.rowwise().sum();
  const Vector sum_dy_xhat = d_y.cwiseProduct(cache.normalized).rowwise().sum();
  grads[gamma_index(layer)] += sum_dy_xhat;
  grads[beta_index(layer)] += sum_dy;
  const Vector scale = (gamma.array() * cache.inv_std.array() / m).matrix();
  Matrix dz = ((d_y.array() * m).colwise() - sum_dy.array()).matrix();
  dz -= (cache.normalized.array().colwise() * sum_dy_xhat.array()).matrix();
  return (dz.array().colwise() * scale.array()).matrix();
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::forward(const Matrix& input, int batch, Mode mode, Rng* rng,
                                                          Workspace<Scalar>& ws) const {
  const int s0 = config_.input_size;
  if (input.rows() != kInputChannels || input.cols() != static_cast<Eigen::Index>(batch) * s0 * s0) {
    throw InvalidArgument("network input shape mismatch: expected 15 x (N*" + std::to_string(s0) + "*" +
                          std::to_string(s0) + ")");
  }
  if (mode == Mode::train && config_.dropout > 0.0 && rng == nullptr) {
    throw InvalidArgument("train-mode forward with dropout needs a random stream");
  }
  ws.batch = batch;
  ws.mode = mode;
  const double keep = 1.0 - config_.dropout;
  std::bernoulli_distribution bernoulli(keep);
  auto make_mask = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix mask(rows, cols);
    const auto scale = static_cast<Scalar>(1.0 / keep);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = bernoulli(*rng) ? scale : Scalar(0);
    return mask;
  };

  Matrix x = input;
  int s = s0;
  for (int l = 0; l < 4; ++l) {
    auto& c = ws.layers[l];
    c.height = c.width = s;
    im2col(x, batch, s, s, config_.kernel_size, c.input);
    const Matrix z = params_[w_index(l)] * c.input;
    batch_norm_forward(l, z, mode, c);
    if (mode == Mode::train && uses_dropout(l)) {
      c.dropout_mask = make_mask(c.activated.rows(), c.activated.cols());
      x = max_pool(Matrix(c.activated.cwiseProduct(c.dropout_mask)), batch, s, s, c.pool_argmax);
    } else {
      c.dropout_mask.resize(0, 0);
      x = max_pool(c.activated, batch, s, s, c.pool_argmax);
    }
    s = (s + 1) / 2;
  }

  Matrix f = Eigen::Map<const Matrix>(x.data(), x.rows() * s * s, batch);
  for (int j = 0; j < 2; ++j) {
    const int l = 4 + j;
    auto& c = ws.layers[l];
    c.input = f;
    const Matrix z = params_[w_index(l)] * f;
    batch_norm_forward(l, z, mode, c);
    if (mode == Mode::train && uses_dropout(l)) {
      c.dropout_mask = make_mask(c.activated.rows(), c.activated.cols());
      f = c.activated.cwiseProduct(c.dropout_mask);
    } else {
      c.dropout_mask.resize(0, 0);
      f = c.activated;
    }
  }
  ws.output_input = f;
  Matrix out = params_[out_w_index()] * f;
  out.colwise() += Vector(params_[out_b_index()]);
  return out;
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::backward(const Workspace<Scalar>& ws, const Matrix& d_output,
                                                           std::vector<Matrix>& grads, bool input_gradient) const {
  if (ws.mode != Mode::train) throw InvalidArgument("backward requires a train-mode forward pass");
  const int batch = ws.batch;
  grads[out_w_index()] += d_output * ws.output_input.transpose();
  grads[out_b_index()] += d_output.rowwise().sum();
  Matrix d = params_[out_w_index()].transpose() * d_output;

  for (int j = 1; j >= 0; --j) {
    const int l = 4 + j;
    const auto& c = ws.layers[l];
    if (c.dropout_mask.size() > 0) d = d.cwiseProduct(c.dropout_mask);
    d = (c.activated.array() > Scalar(0)).select(d, Scalar(0));
    const Matrix dz = batch_norm_backward(l, c, d, grads);
    grads[w_index(l)].noalias() += dz * c.input.transpose();
    d = params_[w_index(l)].transpose() * dz;
  }

  const int s4 = config_.pooled_size(4);
  d = Eigen::Map<const Matrix>(d.data(), config_.conv_widths[3], static_cast<Eigen::Index>(batch) * s4 * s4);

  for (int l = 3; l >= 0; --l) {
    const auto& c = ws.layers[l];
    const int s = c.height;
    d = max_unpool(d, batch * s * s, c.pool_argmax);
    if (c.dropout_mask.size() > 0) d = d.cwiseProduct(c.dropout_mask);
    d = (c.activated.array() > Scalar(0)).select(d, Scalar(0));
    const Matrix dz = batch_norm_backward(l, c, d, grads);
    grads[w_index(l)].noalias() += dz * c.input.transpose();
    if (l == 0 && !input_gradient) return Matrix();
    const Matrix d_cols = params_[w_index(l)].transpose() * dz;
    const int in_channels = l == 0 ? kInputChannels : config_.conv_widths[l - 1];
    d = col2im(d_cols, in_channels, batch, s, s, config_.kernel_size);
  }
  return d;
}

template <typename Scalar>
void Network<Scalar>::update_running_stats(const Workspace<Scalar>& ws) {
  if (ws.mode != Mode::train) return;
  const auto m = static_cast<Scalar>(config_.bn_momentum);
  for (int l = 0; l < kHidden; ++l) {
    const auto& c = ws.layers[l];
    // Unbiased variance for the running estimate.
    const Eigen::Index count = c.normalized.cols();
    const Scalar correction = count > 1 ? static_cast<Scalar>(count) / static_cast<Scalar>(count - 1) : Scalar(1);
    buffers_[2 * l] = (Scalar(1) - m) * buffers_[2 * l] + m * c.batch_mean;
    buffers_[2 * l + 1] = (Scalar(1) - m) * buffers_[2 * l + 1] + m * correction * c.batch_var;
  }
}

template <typename Scalar>
std::vector<typename Network<Scalar>::Matrix> Network<Scalar>::zero_gradients() const {
  std::vector<Matrix> g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Matrix::Zero(p.rows(), p.cols()));
  return g;
}

template <typename Scalar>
std::vector<std::string> Network<Scalar>::tensor_names() const {
  std::vector<std::string> names;
  for (int l = 0; l < kHidden; ++l) {
    const std::string base = l < 4 ? "conv" + std::to_string(l) : "fc" + std::to_string(l - 4);
    names.push_back(base + ".weight");
    names.push_back(base + ".bn.gamma");
    names.push_back(base + ".bn.beta");
  }
  names.push_back("out.weight");
  names.push_back("out.bias");
  for (int l = 0; l < kHidden; ++l) {
    const std::string base = l < 4 ? "conv" + std::to_string(l) : "fc" + std::to_string(l - 4);
    names.push_back(base + ".bn.running_mean");
    names.push_back(base + ".bn.running_var");
  }
  return names;
}

template <typename Scalar>
std::vector<NamedTensor> Network<Scalar>::export_tensors() const {
  const auto names = tensor_names();
  std::vector<NamedTensor> out;
  auto push = [&](const Matrix& m, const std::string& name) {
    NamedTensor t;
    t.name = name;
    t.shape = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
    t.values.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) t.values[i] = static_cast<float>(m.data()[i]);
    out.push_back(std::move(t));
  };
  std::size_t n = 0;
  for (const auto& p : params_) push(p, names[n++]);
  for (const auto& b : buffers_) push(b, names[n++]);
  return out;
}

template <typename Scalar>
void Network<Scalar>::import_tensors(const std::vector<NamedTensor>& tensors) {
  const auto names = tensor_names();
  if (tensors.size() != params_.size() + buffers_.size()) {
    throw InvalidArgument("checkpoint tensor count does not match the network configuration");
  }
  std::size_t n = 0;
  auto load = [&](Matrix& m) {
    const auto& t = tensors[n];
    if (t.name != names[n] || t.shape.size() != 2 || t.shape[0] != m.rows() || t.shape[1] != m.cols()) {
      throw InvalidArgument("checkpoint tensor '" + t.name + "' does not match expected '" + names[n] + "'");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(t.values[i]);
    ++n;
  };
  for (auto& p : params_) load(p);
  for (auto& b : buffers_) load(b);
}

template <typename Scalar>
template <typename Other>
Network<Other> Network<Scalar>::cast() const {
  Network<Other> out(config_);
  for (std::size_t i = 0; i < params_.size(); ++i) out.params_[i] = params_[i].template cast<Other>();
  for (std::size_t i = 0; i < buffers_.size(); ++i) out.buffers_[i] = buffers_[i].template cast<Other>();
  return out;
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;

void write_network_input(std::span<const ImageF* const, kHistoryFrames> images,
                         std::span<const NormalizedParams, kHistoryFrames> params, int input_size, float* dst) {
  for (const ImageF* img : images) {
    if (img == nullptr || img->width() != input_size || img->height() != input_size) {
      throw InvalidArgument("network image must be input_size x input_size");
    }
  }
  const int pixels = input_size * input_size;
  for (int p = 0; p < pixels; ++p) {
    float* col = dst + static_cast<std::ptrdiff_t>(p) * kInputChannels;
    for (int f = 0; f < kHistoryFrames; ++f) {
      const float v = images[f]->pixels()[p];
      col[3 * f] = v;
      col[3 * f + 1] = v;
      col[3 * f + 2] = v;
    }
    for (int f = 0; f < kHistoryFrames; ++f) {
      col[9 + f] = static_cast<float>(params[f].gain);
      col[12 + f] = static_cast<float>(params[f].exposure);
    }
  }
}

ImageF network_image(const Frame& frame, int input_size) {
  return resize_area(to_unit_float(frame.image, frame.max_code), input_size, input_size);
}

Predictor::Predictor(const Checkpoint& checkpoint) : network_(checkpoint.config) {
  network_.import_tensors(checkpoint.tensors);
}

NormalizedParams Predictor::raw_output(std::span<const Frame> history) const {
  if (history.empty()) throw InvalidArgument("predictor needs at least one frame");
  const int size = network_.config().input_size;
  // Newest first; short histories repeat the earliest frame.
  std::array<const Frame*, kHistoryFrames> frames{};
  const std::size_t n = history.size();
  for (int f = 0; f < kHistoryFrames; ++f) {
    const std::size_t back = static_cast<std::size_t>(f);
    frames[f] = back < n ? &history[n - 1 - back] : &history[n > kHistoryFrames ? n - kHistoryFrames : 0];
  }
  std::array<ImageF, kHistoryFrames> images;
  std::array<const ImageF*, kHistoryFrames> image_ptrs{};
  std::array<NormalizedParams, kHistoryFrames> params{};
  for (int f = 0; f < kHistoryFrames; ++f) {
    images[f] = network_image(*frames[f], size);
    image_ptrs[f] = &images[f];
    params[f] = normalize(frames[f]->params);
  }
  Eigen::MatrixXf input(kInputChannels, size * size);
  write_network_input(image_ptrs, params, size, input.data());
  Workspace<float> ws;
  const Eigen::MatrixXf out = network_.forward(input, 1, Mode::eval, nullptr, ws);
  return {static_cast<double>(out(0, 0)), static_cast<double>(out(1, 0))};
}

CameraParams Predictor::predict_next(std::span<const Frame> history) const {
  return params_from_raw_output(raw_output(history));
}

CameraParams params_from_raw_output(const NormalizedParams& raw) {
  return denormalize({std::clamp(raw.gain, 0.0, 1.0), std::clamp(raw.exposure, 0.0, 1.0)});
}

}  // namespace camctl
