#include "camctl/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

namespace camctl {

void TrainingSet::add_episode(const CollectedDataset& dataset, const std::vector<LabeledSample>& samples,
                              int group) {
  const int base = static_cast<int>(images_.size());
  images_.reserve(images_.size() + 2 * dataset.size());
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    for (int c = 1; c <= 2; ++c) images_.push_back(network_image(dataset.frame(t, c), input_size_));
  }
  items_.reserve(items_.size() + samples.size());
  for (const auto& s : samples) {
    Item item;
    for (int k = 0; k < kHistoryFrames; ++k) {
      const FrameRef& ref = s.frames[kHistoryFrames - 1 - k];
      if (ref.time_index >= dataset.size()) throw InvalidArgument("sample references a missing frame");
      item.images[k] = base + static_cast<int>(2 * ref.time_index) + (ref.camera_id - 1);
      item.params[k] = normalize(s.params[kHistoryFrames - 1 - k]);
    }
    item.target = s.target;
    item.group = group;
    items_.push_back(item);
  }
}

void TrainingSet::add_item(const std::array<ImageF, kHistoryFrames>& images,
                           const std::array<NormalizedParams, kHistoryFrames>& params, NormalizedParams target,
                           int group) {
  Item item;
  for (int k = 0; k < kHistoryFrames; ++k) {
    if (images[k].width() != input_size_ || images[k].height() != input_size_) {
      throw InvalidArgument("training image must match the network input size");
    }
    item.images[k] = static_cast<int>(images_.size());
    images_.push_back(images[k]);
  }
  item.params = params;
  item.target = target;
  item.group = group;
  items_.push_back(item);
}

void TrainingSet::gather(std::span<const std::size_t> indices, Eigen::MatrixXf& input,
                         Eigen::MatrixXf& targets) const {
  const Eigen::Index block = static_cast<Eigen::Index>(input_size_) * input_size_;
  const auto n = static_cast<Eigen::Index>(indices.size());
  input.resize(kInputChannels, n * block);
  targets.resize(2, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Item& item = items_.at(indices[b]);
    std::array<const ImageF*, kHistoryFrames> imgs{};
    for (int k = 0; k < kHistoryFrames; ++k) imgs[k] = &images_[item.images[k]];
    write_network_input(imgs, item.params, input_size_, input.data() + b * block * kInputChannels);
    targets(0, b) = static_cast<float>(item.target.gain);
    targets(1, b) = static_cast<float>(item.target.exposure);
  }
}

void TrainHyper::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must be in [0, 1)");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw InvalidArgument("holdout_fraction must be in [0, 1)");
}

template <typename Scalar>
Adam<Scalar>::Adam(const std::vector<Matrix>& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

template <typename Scalar>
void Adam<Scalar>::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
  ++steps_;
  const auto b1 = static_cast<Scalar>(beta1_);
  const auto b2 = static_cast<Scalar>(beta2_);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  const auto step_size = static_cast<Scalar>(lr_ * std::sqrt(c2) / c1);
  const auto eps = static_cast<Scalar>(eps_ * std::sqrt(c2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (Scalar(1) - b1) * grads[i];
    v_[i] = b2 * v_[i] + (Scalar(1) - b2) * grads[i].cwiseAbs2();
    params[i].array() -= step_size * m_[i].array() / (v_[i].array().sqrt() + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

std::vector<int> holdout_groups(const TrainingSet& set, double fraction, std::uint64_t seed) {
  std::set<int> unique;
  for (const auto& item : set.items()) unique.insert(item.group);
  std::vector<int> groups(unique.begin(), unique.end());
  if (groups.size() < 2 || fraction <= 0.0) return {};
  auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(groups.size())));
  count = std::clamp<std::size_t>(count, 1, groups.size() - 1);
  Rng rng = derive_stream(seed, 0x401d, 0);
  std::shuffle(groups.begin(), groups.end(), rng);
  groups.resize(count);
  std::sort(groups.begin(), groups.end());
  return groups;
}

double evaluate_loss(const Network<float>& network, const TrainingSet& set, std::span<const std::size_t> indices,
                     int batch_size) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXf input, targets;
  Workspace<float> ws;
  double total = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min<std::size_t>(batch_size, indices.size() - start);
    set.gather(indices.subspan(start, n), input, targets);
    const Eigen::MatrixXf out = network.forward(input, static_cast<int>(n), Mode::eval, nullptr, ws);
    total += static_cast<double>(l1_loss<float>(out, targets, network.config().epsilon)) * static_cast<double>(n);
  }
  return total / static_cast<double>(indices.size());
}

TrainResult train(const TrainingSet& set, const NetworkConfig& config, const TrainHyper& hyper, std::uint64_t seed,
                  int round, const Checkpoint* warm_start, const std::function<void(const EpochLog&)>& on_epoch) {
  hyper.validate();
  config.validate();
  if (set.size() == 0) throw InvalidArgument("training set is empty");
  if (set.input_size() != config.input_size) throw InvalidArgument("training set resolution differs from the network");

  Network<float> net(config, mix_seed(seed ^ 0x1417));
  if (warm_start) {
    if (!(warm_start->config == config)) throw InvalidArgument("warm-start checkpoint has a different network config");
    net.import_tensors(warm_start->tensors);
  }

  TrainResult result;
  result.holdout_groups = holdout_groups(set, hyper.holdout_fraction, seed);
  std::vector<std::size_t> train_idx, hold_idx;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int g = set.items()[i].group;
    if (std::binary_search(result.holdout_groups.begin(), result.holdout_groups.end(), g)) {
      hold_idx.push_back(i);
    } else {
      train_idx.push_back(i);
    }
  }
  if (train_idx.size() < 2) throw InvalidArgument("training split needs at least two samples");

  Adam<float> adam(net.params(), hyper.learning_rate, hyper.beta1, hyper.beta2, hyper.adam_eps);
  Rng dropout_rng = derive_stream(seed, 0xd0, 0);
  Workspace<float> ws;
  Eigen::MatrixXf input, targets;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng order_rng = derive_stream(seed, 0x5ff1e, static_cast<std::uint64_t>(epoch));
    std::shuffle(train_idx.begin(), train_idx.end(), order_rng);
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t n = std::min<std::size_t>(hyper.batch_size, train_idx.size() - start);
      if (n < 2) continue;
      set.gather(std::span<const std::size_t>(train_idx).subspan(start, n), input, targets);
      const Eigen::MatrixXf out = net.forward(input, static_cast<int>(n), Mode::train, &dropout_rng, ws);
      const float loss = l1_loss<float>(out, targets, config.epsilon);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", batch starting at " +
                               std::to_string(start) + ": loss is not finite");
      }
      auto grads = net.zero_gradients();
      net.backward(ws, l1_loss_gradient<float>(out, targets, config.epsilon), grads);
      adam.step(net.params(), grads);
      net.update_running_stats(ws);
      total += static_cast<double>(loss) * static_cast<double>(n);
      seen += n;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = total / static_cast<double>(seen);
    log.holdout_loss = evaluate_loss(net, set, hold_idx, hyper.batch_size);
    result.curve.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  result.checkpoint.config = config;
  result.checkpoint.round = round;
  result.checkpoint.tensors = net.export_tensors();
  return result;
}

}  // namespace camctl
