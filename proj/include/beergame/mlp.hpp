#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace beergame {

struct AdamConfig {
  double base_lr = 0.00025;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay_rate = 0.98;
  std::uint64_t decay_stair = 10000;

  // Staircase decay: base_lr * decay_rate^floor(step / decay_stair).
  double learning_rate(std::uint64_t step) const;
};

// Fully connected network, ReLU on hidden layers and a linear output layer.
// Weights, biases and Adam moments are all f64.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
    Eigen::MatrixXd weight_m, weight_v;
    Eigen::VectorXd bias_m, bias_v;
  };

  struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
  };

  // He-uniform weights (bound sqrt(6 / fan_in)) and zero biases.
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

  // All parameters zero.
  static Mlp zeros(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  Layer& layer(int l) { return layers_[l]; }
  const Layer& layer(int l) const { return layers_[l]; }

  // Leading weight layers excluded from updates.
  int frozen_layers() const { return frozen_; }
  void set_frozen_layers(int k);

  std::uint64_t step() const { return step_; }

  Eigen::VectorXd forward(std::span<const double> x) const;
  // Columns of `x` are samples; returns output_size x batch.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

  // Mean over the batch of (target_j - Q(x_j, action_j))^2. Only the taken
  // action's output contributes.
  double loss(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
              std::span<const int> actions) const;

  // Loss gradient for every layer (frozen layers included).
  Gradients gradients(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                      std::span<const int> actions, double* loss_out = nullptr) const;

  // One Adam step on the non-frozen layers. Throws NumericError on a
  // non-finite loss, leaving the network untouched.
  double train_step(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                    std::span<const int> actions, const AdamConfig& adam);

  // Copies weights and biases only (target-network sync).
  void copy_parameters_from(const Mlp& other);
  // Zeroes Adam moments and the step counter.
  void reset_optimizer();

  bool same_parameters(const Mlp& other) const;

  // Little-endian binary format:
  //   "BGQN" | u32 version | u32 scalar bytes (8) | u32 layer-size count |
  //   u32 sizes... | u32 frozen layers | u64 step |
  //   per layer: weight (row-major), bias, weight_m, weight_v, bias_m, bias_v
  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);
  std::string to_bytes() const;
  static Mlp from_bytes(const std::string& bytes);
  void save_file(const std::string& path) const;
  static Mlp load_file(const std::string& path);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  explicit Mlp(std::vector<int> layer_sizes);
  void check_batch(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                   std::span<const int> actions) const;
  double backprop(const Eigen::MatrixXd& batch_x, std::span<const double> targets,
                  std::span<const int> actions, int lowest_layer, Gradients& grads) const;

  std::vector<int> sizes_;
  std::vector<Layer> layers_;
  int frozen_ = 0;
  std::uint64_t step_ = 0;
};

}  // namespace beergame
