#include "beergame/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "beergame/errors.hpp"

namespace beergame {

double AdamConfig::learning_rate(std::uint64_t step) const {
  const auto stairs = static_cast<double>(step / decay_stair);
  return base_lr * std::pow(decay_rate, stairs);
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ShapeError("network needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw ShapeError("layer sizes must be positive");
  }
  layers_.resize(sizes_.size() - 1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Layer& layer = layers_[l];
    layer.weight = Eigen::MatrixXd::Zero(out, in);
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.weight_m = Eigen::MatrixXd::Zero(out, in);
    layer.weight_v = Eigen::MatrixXd::Zero(out, in);
    layer.bias_m = Eigen::VectorXd::Zero(out);
    layer.bias_v = Eigen::VectorXd::Zero(out);
  }
}

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : Mlp(std::move(layer_sizes)) {
  std::mt19937_64 rng(seed);
  for (auto& layer : layers_) {
    const double bound = std::sqrt(6.0 / double(layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
  }
}

Mlp Mlp::zeros(std::vector<int> layer_sizes) { return Mlp(std::move(layer_sizes)); }

void Mlp::set_frozen_layers(int k) {
  if (k < 0 || k > num_layers()) {
    throw ConfigError("frozen layer count must lie in [0, " + std::to_string(num_layers()) + "]");
  }
  frozen_ = k;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_size()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " values, network expects " +
                     std::to_string(input_size()));
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size()));
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::VectorXd z = layers_[l].weight * a + layers_[l].bias;
    a = l + 1 < num_layers() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_size()) throw ShapeError("batch rows must equal the input size");
  Eigen::MatrixXd a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < num_layers()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

void Mlp::check_batch(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                      std::span<const int> actions) const {
  if (batch_x.rows() != input_size()) throw ShapeError("batch rows must equal the input size");
  if (batch_x.cols() < 1) throw ShapeError("batch must hold at least one sample");
  if (Eigen::Index(targets.size()) != batch_x.cols() ||
      Eigen::Index(actions.size()) != batch_x.cols()) {
    throw ShapeError("targets and actions need one entry per batch column");
  }
  for (int a : actions) {
    if (a < 0 || a >= output_size()) throw ShapeError("action index out of range");
  }
}

double Mlp::loss(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                 std::span<const int> actions) const {
  check_batch(batch_x, targets, actions);
  const Eigen::MatrixXd q = forward_batch(batch_x);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double e = targets[j] - q(actions[j], j);
    sum += e * e;
  }
  return sum / double(q.cols());
}

double Mlp::backprop(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                     std::span<const int> actions, int lowest_layer, Gradients& grads) const {
  const int n_layers = num_layers();
  const double batch = double(batch_x.cols());
  // activations[l] is the input to layer l; pre[l] its affine output.
  std::vector<Eigen::MatrixXd> activations(n_layers + 1);
  std::vector<Eigen::MatrixXd> pre(n_layers);
  activations[0] = batch_x;
  for (int l = 0; l < n_layers; ++l) {
    pre[l] = layers_[l].weight * activations[l];
    pre[l].colwise() += layers_[l].bias;
    activations[l + 1] = l + 1 < n_layers ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Eigen::MatrixXd& q = activations[n_layers];
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double e = targets[j] - q(actions[j], j);
    sum += e * e;
    delta(actions[j], j) = -2.0 * e / batch;
  }
  grads.weight.assign(n_layers, Eigen::MatrixXd());
  grads.bias.assign(n_layers, Eigen::VectorXd());
  for (int l = n_layers - 1; l >= lowest_layer; --l) {
    grads.weight[l].noalias() = delta * activations[l].transpose();
    grads.bias[l] = delta.rowwise().sum();
    if (l == lowest_layer) break;
    Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return sum / batch;
}

Mlp::Gradients Mlp::gradients(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                              std::span<const int> actions, double* loss_out) const {
  check_batch(batch_x, targets, actions);
  Gradients grads;
  const double l = backprop(batch_x, targets, actions, 0, grads);
  if (loss_out) *loss_out = l;
  return grads;
}

double Mlp::train_step(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                       std::span<const int> actions, const AdamConfig& adam) {
  check_batch(batch_x, targets, actions);
  Gradients grads;
  const double value = backprop(batch_x, targets, actions, std::min(frozen_, num_layers()),
                                grads);
  if (!std::isfinite(value)) {
    throw NumericError("non-finite loss at step " + std::to_string(step_));
  }
  const double lr = adam.learning_rate(step_);
  const double t = double(step_ + 1);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = adam.beta1 * m + (1.0 - adam.beta1) * g;
    v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.epsilon);
  };
  for (int l = frozen_; l < num_layers(); ++l) {
    Layer& layer = layers_[l];
    update(layer.weight, layer.weight_m, layer.weight_v, grads.weight[l]);
    update(layer.bias, layer.bias_m, layer.bias_v, grads.bias[l]);
  }
  ++step_;
  return value;
}

void Mlp::copy_parameters_from(const Mlp& other) {
  if (other.sizes_ != sizes_) throw ShapeError("cannot copy parameters between different shapes");
  for (int l = 0; l < num_layers(); ++l) {
    layers_[l].weight = other.layers_[l].weight;
    layers_[l].bias = other.layers_[l].bias;
  }
}

void Mlp::reset_optimizer() {
  for (auto& layer : layers_) {
    layer.weight_m.setZero();
    layer.weight_v.setZero();
    layer.bias_m.setZero();
    layer.bias_v.setZero();
  }
  step_ = 0;
}

bool Mlp::same_parameters(const Mlp& other) const {
  if (other.sizes_ != sizes_) return false;
  for (int l = 0; l < num_layers(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight) return false;
    if (layers_[l].bias != other.layers_[l].bias) return false;
  }
  return true;
}

namespace {

constexpr char kMagic[4] = {'B', 'G', 'Q', 'N'};

template <class T>
void put(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <class T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw FormatError("weight stream is truncated");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
}

void get_matrix(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(in);
  }
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v(i));
}

void get_vector(std::istream& in, Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = get<double>(in);
}

}  // namespace

void Mlp::save(std::ostream& out) const {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, sizeof(double));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sizes_.size()));
  for (int s : sizes_) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frozen_));
  put<std::uint64_t>(out, step_);
  for (const auto& layer : layers_) {
    put_matrix(out, layer.weight);
    put_vector(out, layer.bias);
    put_matrix(out, layer.weight_m);
    put_matrix(out, layer.weight_v);
    put_vector(out, layer.bias_m);
    put_vector(out, layer.bias_v);
  }
}

Mlp Mlp::load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a network weight file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw FormatError("unsupported weight format version " + std::to_string(version));
  }
  if (get<std::uint32_t>(in) != sizeof(double)) {
    throw FormatError("weight file scalar width does not match this build");
  }
  const auto count = get<std::uint32_t>(in);
  if (count < 2 || count > 64) throw FormatError("implausible layer count in weight file");
  std::vector<int> sizes(count);
  for (auto& s : sizes) {
    const auto v = get<std::uint32_t>(in);
    if (v == 0 || v > (1u << 20)) throw FormatError("implausible layer size in weight file");
    s = static_cast<int>(v);
  }
  Mlp net(sizes);
  const auto frozen = get<std::uint32_t>(in);
  if (frozen > count - 1) throw FormatError("frozen layer count exceeds layer count");
  net.frozen_ = static_cast<int>(frozen);
  net.step_ = get<std::uint64_t>(in);
  for (auto& layer : net.layers_) {
    get_matrix(in, layer.weight);
    get_vector(in, layer.bias);
    get_matrix(in, layer.weight_m);
    get_matrix(in, layer.weight_v);
    get_vector(in, layer.bias_m);
    get_vector(in, layer.bias_v);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("weight file is longer than its declared layer sizes");
  }
  return net;
}

std::string Mlp::to_bytes() const {
  std::ostringstream out(std::ios::binary);
  save(out);
  return out.str();
}

Mlp Mlp::from_bytes(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load(in);
}

void Mlp::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  save(out);
  if (!out) throw FormatError("failed writing " + path);
}

Mlp Mlp::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return load(in);
}

}  // namespace beergame
