#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dabid/common.hpp"

namespace dabid {

enum class Activation { kTanh, kIdentity };

struct DenseLayer {
  Eigen::MatrixXd weight;  // outputs x inputs
  Eigen::VectorXd bias;
};

// Per-parameter partials, shaped like the owning network's layers.
struct GradientSet {
  std::vector<DenseLayer> layers;

  void set_zero();
  GradientSet& operator+=(const GradientSet& other);
};

// Feed-forward network: affine layers with `hidden` activation between them
// and a linear output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes, Activation hidden = Activation::kTanh);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  // Columns are samples.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  // Gradient of sum_j output_grads.col(j) . net(inputs.col(j)) with respect to
  // every weight and bias.
  GradientSet backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grads) const;
  GradientSet backward(const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad) const;

  GradientSet zero_gradients() const;

 private:
  std::vector<int> sizes_;
  Activation hidden_ = Activation::kTanh;
  std::vector<DenseLayer> layers_;
};

// Orthogonal rows or columns (whichever are fewer) scaled by the per-layer
// gain; biases zero.
void orthogonal_init(Mlp& net, std::uint64_t seed, std::span<const double> gains);

struct RmsPropConfig {
  double learning_rate = 1e-4;
  double decay = 0.99;
  double epsilon = 1e-5;
};

struct RmsPropState {
  std::vector<Eigen::VectorXd> square_avg;
};

// One step over matching parameter/gradient blocks:
//   v = decay * v + (1 - decay) * g^2;  p -= lr * g / (sqrt(v) + eps).
// Throws TrainingDivergedError, leaving everything untouched, on a non-finite
// gradient.
void rmsprop_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
                  RmsPropState& state, const RmsPropConfig& config);

// Scales all blocks so their joint L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<const std::span<double>> grads, double max_norm);

// Constants mapping raw market data into the policy's input space, shipped
// with the weights so a policy file is self-contained.
struct PolicyNormalization {
  double price_scale = 1.0;
  double consumption_scale = 1.0;
  double max_wind_speed = 11.0;
  double temperature_min = -20.0;
  double temperature_max = 40.0;
  bool include_weather = true;
};

inline constexpr int kActionSize = 96;

// Gaussian policy with state-independent log standard deviations plus a
// separate critic of the same width.
struct PolicyParams {
  Mlp actor;
  Eigen::VectorXd log_std;
  Mlp critic;
  PolicyNormalization normalization;

  int input_size() const { return actor.input_size(); }

  // Hidden gain 1.0, policy head 0.01, value head 1.0.
  static PolicyParams create(int input_size, int hidden_width, double log_std_init, std::uint64_t seed);
};

struct PolicyGradients {
  GradientSet actor;
  Eigen::VectorXd log_std;
  GradientSet critic;

  static PolicyGradients zeros_like(const PolicyParams& policy);
};

// Blocks in a fixed order shared by parameters and gradients.
std::vector<std::span<double>> parameter_blocks(PolicyParams& policy);
std::vector<std::span<double>> gradient_blocks(PolicyGradients& grads);
std::vector<std::span<double>> parameter_blocks(Mlp& net);
std::vector<std::span<double>> gradient_blocks(GradientSet& grads);

void save_policy(const PolicyParams& policy, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);
std::string policy_to_json(const PolicyParams& policy);
PolicyParams policy_from_json(const std::string& text);

}  // namespace dabid
