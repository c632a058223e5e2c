#include "rapid/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rapid/errors.hpp"

namespace rapid {

void PpoConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw InvalidInput("ppo.gamma must lie in [0, 1]");
  if (lambda < 0.0 || lambda > 1.0) throw InvalidInput("ppo.lambda must lie in [0, 1]");
  if (!(clip > 0.0)) throw InvalidInput("ppo.clip must be > 0");
  if (!(lr > 0.0)) throw InvalidInput("ppo.lr must be > 0");
  if (nstep < 1) throw InvalidInput("ppo.nstep must be >= 1");
  if (epochs < 0) throw InvalidInput("ppo.epochs must be >= 0");
  if (minibatches < 1 || minibatches > nstep) throw InvalidInput("ppo.minibatches must lie in [1, nstep]");
}

void RolloutBatch::clear() {
  obs.clear();
  actions.clear();
  rewards.clear();
  dones.clear();
  values.clear();
  log_probs.clear();
  bootstrap_value = 0.0;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                      double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw InvalidInput("compute_gae: length mismatch");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t t = n; t-- > 0;) {
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
    next_adv = delta + gamma * lambda * nonterminal * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
    next_value = values[t];
  }
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / n);
  for (double& a : adv) a = (a - mean) / (std + 1e-8);
}

nn::Matrix stack_observations(std::span<const Observation> obs, std::span<const double> scale) {
  std::vector<const Observation*> ptrs;
  ptrs.reserve(obs.size());
  for (const auto& o : obs) ptrs.push_back(&o);
  return stack_observations(std::span<const Observation* const>(ptrs), scale);
}

nn::Matrix stack_observations(std::span<const Observation* const> obs, std::span<const double> scale) {
  const auto dim = static_cast<Eigen::Index>(scale.size());
  nn::Matrix m(dim, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    const Observation& o = *obs[j];
    if (static_cast<Eigen::Index>(o.size()) != dim)
      throw InvalidInput("stack_observations: observation dimension mismatch");
    for (Eigen::Index i = 0; i < dim; ++i)
      m(i, static_cast<Eigen::Index>(j)) = o[static_cast<std::size_t>(i)] / scale[static_cast<std::size_t>(i)];
  }
  return m;
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Per-sample log-probabilities and their derivatives w.r.t. the policy
// outputs, for either action distribution.
struct PolicyEval {
  std::vector<double> log_probs;
  std::vector<double> entropies;
  nn::Matrix log_softmax;  // discrete: [K x B]
  nn::Matrix out;          // logits or means
  nn::MlpCache cache;
};

PolicyEval eval_policy(const nn::ActorCritic& params, const PolicyBatch& batch) {
  PolicyEval ev;
  ev.out = nn::forward(params.policy, batch.obs, &ev.cache);
  const Eigen::Index n = batch.size();
  ev.log_probs.resize(static_cast<std::size_t>(n));
  ev.entropies.resize(static_cast<std::size_t>(n));
  if (!params.continuous) {
    if (static_cast<Eigen::Index>(batch.actions.size()) != n) throw InvalidInput("policy batch: action count mismatch");
    ev.log_softmax.resize(ev.out.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const nn::Vector lp = nn::log_softmax(ev.out.col(j));
      ev.log_softmax.col(j) = lp;
      const int a = batch.actions[static_cast<std::size_t>(j)];
      if (a < 0 || a >= lp.size()) throw InvalidInput("policy batch: action out of range");
      ev.log_probs[static_cast<std::size_t>(j)] = lp(a);
      ev.entropies[static_cast<std::size_t>(j)] = -(lp.array().exp() * lp.array()).sum();
    }
  } else {
    if (batch.continuous_actions.cols() != n || batch.continuous_actions.rows() != ev.out.rows())
      throw InvalidInput("policy batch: continuous action shape mismatch");
    const double h = nn::gaussian_entropy(params.log_std);
    for (Eigen::Index j = 0; j < n; ++j) {
      double lp = 0.0;
      for (Eigen::Index d = 0; d < ev.out.rows(); ++d) {
        const double ls = nn::clamp_log_std(params.log_std(d, 0));
        const double z = (batch.continuous_actions(d, j) - ev.out(d, j)) * std::exp(-ls);
        lp += -0.5 * z * z - ls - kHalfLog2Pi;
      }
      ev.log_probs[static_cast<std::size_t>(j)] = lp;
      ev.entropies[static_cast<std::size_t>(j)] = h;
    }
  }
  return ev;
}

bool log_std_free(double v) { return v > nn::kLogStdMin && v < nn::kLogStdMax; }

// Adds coef_j * d log pi(a_j|s_j) / d(outputs) into d_out (and d_log_std).
void accumulate_log_prob_grad(const nn::ActorCritic& params, const PolicyBatch& batch, const PolicyEval& ev,
                              std::span<const double> coef, nn::Matrix& d_out, nn::Matrix* d_log_std) {
  const Eigen::Index n = batch.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = coef[static_cast<std::size_t>(j)];
    if (c == 0.0) continue;
    if (!params.continuous) {
      d_out.col(j) -= c * ev.log_softmax.col(j).array().exp().matrix();
      d_out(batch.actions[static_cast<std::size_t>(j)], j) += c;
    } else {
      for (Eigen::Index d = 0; d < d_out.rows(); ++d) {
        const double ls = nn::clamp_log_std(params.log_std(d, 0));
        const double inv_var = std::exp(-2.0 * ls);
        const double diff = batch.continuous_actions(d, j) - ev.out(d, j);
        d_out(d, j) += c * diff * inv_var;
        if (d_log_std && log_std_free(params.log_std(d, 0))) (*d_log_std)(d, 0) += c * (diff * diff * inv_var - 1.0);
      }
    }
  }
}

}  // namespace

PpoLossTerms ppo_loss(const nn::ActorCritic& params, const PolicyBatch& batch, const PpoLossCoefs& coefs,
                      nn::ActorCritic* grads) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw InvalidInput("ppo_loss: empty batch");
  const auto nb = static_cast<std::size_t>(n);
  if (batch.old_log_probs.size() != nb || batch.advantages.size() != nb || batch.returns.size() != nb ||
      batch.old_values.size() != nb)
    throw InvalidInput("ppo_loss: batch field length mismatch");

  const PolicyEval ev = eval_policy(params, batch);
  nn::MlpCache vcache;
  const nn::Matrix values = nn::forward(params.value, batch.obs, &vcache);

  const double inv_n = 1.0 / static_cast<double>(n);
  PpoLossTerms terms;
  std::vector<double> d_logp(nb, 0.0);
  nn::Matrix d_values = nn::Matrix::Zero(1, n);

  for (std::size_t j = 0; j < nb; ++j) {
    const double adv = batch.advantages[j];
    const double ratio = std::exp(ev.log_probs[j] - batch.old_log_probs[j]);
    const double clipped = std::clamp(ratio, 1.0 - coefs.clip, 1.0 + coefs.clip);
    const double l_unclipped = -adv * ratio;
    const double l_clipped = -adv * clipped;
    terms.policy_loss += std::max(l_unclipped, l_clipped);
    // d/d ratio is -adv on the unclipped branch and 0 on the clipped one.
    if (l_unclipped >= l_clipped) d_logp[j] = coefs.pg_coef * inv_n * (-adv) * ratio;
    terms.approx_kl += batch.old_log_probs[j] - ev.log_probs[j];
    if (std::abs(ratio - 1.0) > coefs.clip) terms.clip_fraction += 1.0;

    const double v = values(0, static_cast<Eigen::Index>(j));
    const double v_old = batch.old_values[j];
    const double ret = batch.returns[j];
    const double v_clipped = v_old + std::clamp(v - v_old, -coefs.clip, coefs.clip);
    const double e1 = (v - ret) * (v - ret);
    const double e2 = (v_clipped - ret) * (v_clipped - ret);
    terms.value_loss += 0.5 * std::max(e1, e2);
    double dv = 0.0;
    if (e1 >= e2) {
      dv = v - ret;
    } else if (std::abs(v - v_old) < coefs.clip) {
      dv = v_clipped - ret;
    }
    d_values(0, static_cast<Eigen::Index>(j)) = coefs.vf_coef * inv_n * dv;

    terms.entropy += ev.entropies[j];
  }
  terms.policy_loss *= inv_n;
  terms.value_loss *= inv_n;
  terms.entropy *= inv_n;
  terms.approx_kl *= inv_n;
  terms.clip_fraction *= inv_n;
  terms.total = coefs.pg_coef * terms.policy_loss - coefs.ent_coef * terms.entropy + coefs.vf_coef * terms.value_loss;

  if (!std::isfinite(terms.total)) {
    throw NumericalError("ppo_loss: non-finite loss (policy " + std::to_string(terms.policy_loss) + ", value " +
                         std::to_string(terms.value_loss) + ", entropy " + std::to_string(terms.entropy) + ")");
  }

  if (grads) {
    nn::Matrix d_out = nn::Matrix::Zero(ev.out.rows(), n);
    nn::Matrix* d_log_std = params.continuous ? &grads->log_std : nullptr;
    accumulate_log_prob_grad(params, batch, ev, d_logp, d_out, d_log_std);

    // Entropy bonus: loss term -ent_coef * mean(H).
    if (coefs.ent_coef != 0.0) {
      const double c = -coefs.ent_coef * inv_n;
      if (!params.continuous) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const auto lp = ev.log_softmax.col(j).array();
          const double h = ev.entropies[static_cast<std::size_t>(j)];
          // dH/dlogit_k = -p_k (log p_k + H)
          d_out.col(j).array() += c * (-(lp.exp() * (lp + h)));
        }
      } else {
        for (Eigen::Index d = 0; d < params.log_std.rows(); ++d) {
          if (log_std_free(params.log_std(d, 0))) grads->log_std(d, 0) += c * static_cast<double>(n);
        }
      }
    }
    nn::backward(params.policy, ev.cache, d_out, grads->policy);
    nn::backward(params.value, vcache, d_values, grads->value);
  }
  return terms;
}

double bc_loss(const nn::ActorCritic& params, const PolicyBatch& batch, nn::ActorCritic* grads) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw InvalidInput("bc_loss: empty batch");
  const PolicyEval ev = eval_policy(params, batch);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (double lp : ev.log_probs) loss -= lp;
  loss *= inv_n;
  if (!std::isfinite(loss)) throw NumericalError("bc_loss: non-finite loss");
  if (grads) {
    nn::Matrix d_out = nn::Matrix::Zero(ev.out.rows(), n);
    const std::vector<double> coef(static_cast<std::size_t>(n), -inv_n);
    accumulate_log_prob_grad(params, batch, ev, coef, d_out, params.continuous ? &grads->log_std : nullptr);
    nn::backward(params.policy, ev.cache, d_out, grads->policy);
  }
  return loss;
}

PpoUpdateStats ppo_update(nn::ActorCritic& params, nn::Adam& optimizer, const RolloutBatch& rollout,
                          const PpoConfig& cfg, double pg_coef, double ent_coef,
                          std::span<const double> obs_scale, Rng& rng) {
  const std::size_t n = rollout.size();
  if (n == 0) throw InvalidInput("ppo_update: empty rollout");
  GaeResult gae = compute_gae(rollout.rewards, rollout.values, rollout.dones, rollout.bootstrap_value, cfg.gamma,
                              cfg.lambda);
  normalize_advantages(gae.advantages);

  const nn::Matrix all_obs = stack_observations(rollout.obs, obs_scale);
  const PpoLossCoefs coefs{cfg.clip, pg_coef, cfg.vf_coef, ent_coef};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t mb_size = std::max<std::size_t>(1, n / static_cast<std::size_t>(cfg.minibatches));

  PpoUpdateStats stats;
  int updates = 0;
  nn::ActorCritic grads = params.zeros_like();
  const int action_dim = params.action_dim();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start + mb_size <= n; start += mb_size) {
      PolicyBatch mb;
      mb.obs.resize(all_obs.rows(), static_cast<Eigen::Index>(mb_size));
      if (params.continuous) mb.continuous_actions.resize(action_dim, static_cast<Eigen::Index>(mb_size));
      for (std::size_t k = 0; k < mb_size; ++k) {
        const std::size_t i = order[start + k];
        const auto col = static_cast<Eigen::Index>(k);
        mb.obs.col(col) = all_obs.col(static_cast<Eigen::Index>(i));
        if (params.continuous) {
          for (int d = 0; d < action_dim; ++d)
            mb.continuous_actions(d, col) = rollout.actions[i].values[static_cast<std::size_t>(d)];
        } else {
          mb.actions.push_back(rollout.actions[i].id);
        }
        mb.old_log_probs.push_back(rollout.log_probs[i]);
        mb.advantages.push_back(gae.advantages[i]);
        mb.returns.push_back(gae.returns[i]);
        mb.old_values.push_back(rollout.values[i]);
      }

      grads.set_zero();
      const PpoLossTerms t = ppo_loss(params, mb, coefs, &grads);
      const auto grad_refs = grads.parameters();
      nn::check_finite(std::as_const(grads).parameters(), "ppo_update gradient");
      if (cfg.max_grad_norm > 0.0) nn::clip_global_norm(grad_refs, cfg.max_grad_norm);
      optimizer.step(params.parameters(), std::as_const(grads).parameters());

      stats.loss += t.total;
      stats.policy_loss += t.policy_loss;
      stats.value_loss += t.value_loss;
      stats.entropy += t.entropy;
      stats.approx_kl += t.approx_kl;
      stats.clip_fraction += t.clip_fraction;
      ++updates;
    }
  }
  if (updates > 0) {
    const double inv = 1.0 / updates;
    stats.loss *= inv;
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.entropy *= inv;
    stats.approx_kl *= inv;
    stats.clip_fraction *= inv;
  }
  return stats;
}

}  // namespace rapid
