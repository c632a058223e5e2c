#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rapid/env.hpp"
#include "rapid/nn.hpp"
#include "rapid/rng.hpp"

namespace rapid {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
  double lr = 1e-4;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  int nstep = 128;
  int epochs = 4;
  int minibatches = 4;

  // Throws InvalidInput.
  void validate() const;
};

// One rollout of T consecutive environment steps.
struct RolloutBatch {
  std::vector<Observation> obs;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;  // 1 when the transition ended an episode
  std::vector<double> values;
  std::vector<double> log_probs;
  double bootstrap_value = 0.0;  // V(s_T)

  std::size_t size() const { return rewards.size(); }
  void clear();
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Backward recursion
//   delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t
//   adv_t   = delta_t + gamma * lambda * (1 - done_t) * adv_{t+1}
// with v_T = bootstrap_value; returns = adv + values. Advantages are not
// normalized here. Throws InvalidInput on length mismatch.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                      double lambda);

// In place: zero mean, unit population std (plus 1e-8).
void normalize_advantages(std::vector<double>& adv);

// Network-ready minibatch.
struct PolicyBatch {
  nn::Matrix obs;                 // [obs_dim x B], normalized
  std::vector<int> actions;       // discrete
  nn::Matrix continuous_actions;  // [action_dim x B]
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> old_values;

  Eigen::Index size() const { return obs.cols(); }
};

struct PpoLossCoefs {
  double clip = 0.2;
  double pg_coef = 1.0;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
};

struct PpoLossTerms {
  double policy_loss = 0.0;  // clipped surrogate, mean over batch
  double value_loss = 0.0;   // 0.5 * mean(max(unclipped, clipped) squared error)
  double entropy = 0.0;      // mean policy entropy
  double total = 0.0;        // pg_coef*policy - ent_coef*entropy + vf_coef*value
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Evaluates the PPO objective. When `grads` is non-null, the exact gradient
// of `total` is accumulated into it (same shape as params).
PpoLossTerms ppo_loss(const nn::ActorCritic& params, const PolicyBatch& batch, const PpoLossCoefs& coefs,
                      nn::ActorCritic* grads);

// Mean negative log-likelihood of the batch actions under the policy. The
// value net receives no gradient.
double bc_loss(const nn::ActorCritic& params, const PolicyBatch& batch, nn::ActorCritic* grads);

// Stacks raw observations into a [dim x B] matrix, dividing by `scale`.
nn::Matrix stack_observations(std::span<const Observation> obs, std::span<const double> scale);
nn::Matrix stack_observations(std::span<const Observation* const> obs, std::span<const double> scale);

struct PpoUpdateStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Epochs x minibatches of clipped-PPO Adam steps over one rollout.
// Advantages are normalized once over the whole rollout.
PpoUpdateStats ppo_update(nn::ActorCritic& params, nn::Adam& optimizer, const RolloutBatch& rollout,
                          const PpoConfig& cfg, double pg_coef, double ent_coef,
                          std::span<const double> obs_scale, Rng& rng);

}  // namespace rapid
