#pragma once

// Dense networks with a dueling Q head, hand-written backpropagation, an Adam
// optimiser and a finite-difference gradient checker. Float64 throughout.
//
// Batches are column-major: one observation per column.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "leoho/rng.hpp"

namespace leoho {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

using RowMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Fully connected stack. Hidden layers use ReLU; the output layer uses
// `output_activation`. Parameters live in one flat buffer, layer by layer:
// weights row-major (out x in) followed by biases (out).
class DenseNet {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // [0] = input, [l+1] = output of layer l
  };

  DenseNet() = default;
  explicit DenseNet(std::vector<int> dims, Activation output_activation = Activation::identity);

  const std::vector<int>& dims() const { return dims_; }
  Activation output_activation() const { return output_activation_; }
  std::size_t layer_count() const { return offsets_.size(); }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  RowMatrixMap weight(std::size_t layer);
  ConstRowMatrixMap weight(std::size_t layer) const;
  VectorMap bias(std::size_t layer);
  ConstVectorMap bias(std::size_t layer) const;

  // He-uniform weights, zero biases.
  void initialize(Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;
  // Adds parameter gradients into grad (same layout as parameters()) and
  // returns the gradient with respect to the input.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_output,
                           std::span<double> grad) const;

 private:
  std::vector<int> dims_;
  Activation output_activation_ = Activation::identity;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Training sample for the squared TD loss on the taken action's Q.
struct QSample {
  std::span<const double> observation;
  std::span<const std::uint8_t> mask;  // empty: every action valid
  int action = 0;
  double target = 0.0;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // flat, same layout as DuelingQNet::flat_parameters()
};

// Q(s,a) = V(s) + A(s,a) - mean over valid a' of A(s,a'). Without a mask the
// mean runs over every action slot.
class DuelingQNet {
 public:
  DuelingQNet() = default;
  DuelingQNet(int input_dim, int actions, const std::vector<int>& trunk_hidden,
              const std::vector<int>& stream_hidden);
  DuelingQNet(DenseNet trunk, DenseNet value, DenseNet advantage);

  int input_dim() const { return trunk_.input_dim(); }
  int actions() const { return advantage_.output_dim(); }
  DenseNet& trunk() { return trunk_; }
  DenseNet& value_stream() { return value_; }
  DenseNet& advantage_stream() { return advantage_; }
  const DenseNet& trunk() const { return trunk_; }
  const DenseNet& value_stream() const { return value_; }
  const DenseNet& advantage_stream() const { return advantage_; }

  std::size_t parameter_count() const;
  // trunk | value | advantage
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> params);
  void initialize(Rng& rng);

  // inputs: input_dim x N; masks: actions x N of 0/1 (nullptr = all valid).
  // Returns actions x N.
  Eigen::MatrixXd q_values(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd* masks = nullptr) const;
  Eigen::VectorXd state_values(const Eigen::MatrixXd& inputs) const;

  std::vector<double> forward(std::span<const double> observation) const;
  std::vector<double> forward(std::span<const double> observation,
                              std::span<const std::uint8_t> mask) const;

  // Mean over the batch of (target - Q(s, a))^2 and its gradient.
  LossGradient loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& masks,
                                 std::span<const int> actions, std::span<const double> targets) const;
  LossGradient loss_and_gradient(std::span<const QSample> batch) const;

 private:
  void check_shapes() const;

  DenseNet trunk_;
  DenseNet value_;
  DenseNet advantage_;
};

Eigen::MatrixXd batch_matrix(std::span<const std::span<const double>> columns, int rows);
Eigen::MatrixXd mask_matrix(std::span<const std::span<const std::uint8_t>> columns, int rows);

// Highest valid entry, ties to the lowest index; -1 when nothing is valid.
int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> mask);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t parameter_count, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }

  // Throws TrainingError (parameters untouched) on a non-finite gradient.
  void step(std::span<double> params, std::span<const double> grad);
  void step(DuelingQNet& net, std::span<const double> grad);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t steps_ = 0;
};

// Binary checkpoint, little-endian:
//   "LEOHOQN1" | for trunk, value, advantage: u32 n_dims, u32 dims[n_dims], u8 output activation
//   | u64 parameter count | f64 parameters (trunk | value | advantage)
void save_checkpoint(const DuelingQNet& net, const std::filesystem::path& path);
DuelingQNet load_checkpoint(const std::filesystem::path& path);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Central differences on every parameter. Relative error per parameter is
// |analytic - numeric| / max(|analytic| + |numeric|, 1e-6).
GradCheckReport gradient_check(const DuelingQNet& net, std::span<const QSample> batch, double step = 1e-5);

}  // namespace leoho
