#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rapid/env.hpp"
#include "rapid/rng.hpp"

namespace rapid::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Dense tanh network; linear output layer. Weights are [out x in], biases
// [out x 1]. Samples are stored column-wise.
struct Mlp {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;

  static Mlp zeros(std::span<const int> sizes);
  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  std::size_t num_layers() const { return weights.size(); }
};

// activations[0] is the input, activations.back() the linear output.
struct MlpCache {
  std::vector<Matrix> activations;
};

Matrix forward(const Mlp& net, const Matrix& input, MlpCache* cache = nullptr);

// Accumulates parameter gradients into `grads` given dLoss/dOutput.
void backward(const Mlp& net, const MlpCache& cache, const Matrix& d_output, Mlp& grads);

struct ParamRef {
  std::string name;
  Matrix* value;
};

struct ConstParamRef {
  std::string name;
  const Matrix* value;
};

/// Policy and value networks sharing nothing but the input.
///
/// Discrete actions: the policy net emits categorical logits. Continuous
/// actions: the policy net emits the Gaussian mean and `log_std` holds a
/// learned, state-independent log standard deviation.
struct ActorCritic {
  Mlp policy;
  Mlp value;
  Matrix log_std;  // [action_dim x 1]; empty for discrete actions
  bool continuous = false;

  // Orthogonal init: gain sqrt(2) on hidden layers, 0.01 on the policy head,
  // 1 on the value head; zero biases; log_std = 0.
  static ActorCritic create(int obs_dim, ActionSpace actions, std::span<const int> hidden, Rng& rng);
  ActorCritic zeros_like() const;

  int obs_dim() const { return policy.input_dim(); }
  int action_dim() const { return policy.output_dim(); }

  std::vector<ParamRef> parameters();
  std::vector<ConstParamRef> parameters() const;
  // Policy net and log_std only.
  std::vector<ParamRef> policy_parameters();
  std::vector<ConstParamRef> policy_parameters() const;

  void set_zero();
};

// Throws NumericalError naming the first tensor with a non-finite entry.
void check_finite(std::span<const ConstParamRef> tensors, const std::string& what);
void check_finite(const Matrix& m, const std::string& what);

void orthogonal_init(Matrix& w, double gain, Rng& rng);

double global_norm(std::span<const ConstParamRef> tensors);
// Rescales in place so the global norm does not exceed max_norm. Returns
// the norm before clipping.
double clip_global_norm(std::span<const ParamRef> tensors, double max_norm);

// ---------------------------------------------------------------------------
// Action distributions. Batched helpers take [K x B] logits / means.

Vector log_softmax(const Vector& logits);
double categorical_log_prob(const Vector& logits, int action);
double categorical_entropy(const Vector& logits);
int categorical_sample(const Vector& logits, Rng& rng);
int categorical_mode(const Vector& logits);

double clamp_log_std(double v);
double gaussian_log_prob(const Vector& mean, const Matrix& log_std, std::span<const double> action);
double gaussian_entropy(const Matrix& log_std);
std::vector<double> gaussian_sample(const Vector& mean, const Matrix& log_std, Rng& rng);

/// Bias-corrected Adam. Moments are created lazily from the parameter
/// shapes on the first step.
class Adam {
 public:
  explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<const ParamRef> params, std::span<const ConstParamRef> grads);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }
  std::int64_t step_count() const { return t_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

  // Used by checkpoint loading.
  void restore(std::int64_t t, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  ActorCritic params;
  Adam rl_optimizer;
  Adam bc_optimizer;
};

// Versioned little-endian binary blob. Round trips are bit-exact.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rapid::nn
