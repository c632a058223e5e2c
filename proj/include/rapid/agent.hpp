#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rapid/env.hpp"
#include "rapid/nn.hpp"
#include "rapid/ppo.hpp"
#include "rapid/ranking_buffer.hpp"
#include "rapid/rng.hpp"
#include "rapid/scoring.hpp"

namespace rapid {

// Training modes. The first eight are RAPID and its ablations; kPpo and
// kCount are the plain PPO and count-bonus baselines.
//   no_local          w1 = 0
//   no_global         w2 = 0
//   no_ext            w0 = 0
//   no_buffer         no buffer or cloning; s_total is added to the
//                     terminal reward seen by PPO
//   no_ranking        buffer evicts oldest pairs instead of lowest scores
//   pure_exploration  environment reward removed from PPO and ranking
//   bc_only           PPO policy and entropy terms off; cloning only
//   ppo               no buffer, no scores
//   count             ppo plus a per-step bonus beta / sqrt(N(s'))
enum class Mode {
  kFull,
  kNoLocal,
  kNoGlobal,
  kNoExt,
  kNoBuffer,
  kNoRanking,
  kPureExploration,
  kBcOnly,
  kPpo,
  kCount,
};

std::string_view to_string(Mode mode);
// Throws InvalidInput listing the accepted names.
Mode parse_mode(std::string_view s);

bool uses_buffer(Mode mode);

struct RapidConfig {
  ScoreWeights weights;
  std::size_t buffer_size = 10000;
  int bc_steps = 5;  // S, per completed episode
  int bc_batch = 256;
  Mode mode = Mode::kFull;
  bool anneal = false;
  std::int64_t anneal_horizon = 0;  // frames; 0 means the run's total frames
  double count_bonus_coeff = 0.005;
  bool keep_whole_episodes = false;

  void validate() const;
};

struct AgentConfig {
  PpoConfig ppo;
  RapidConfig rapid;
  std::vector<int> hidden{64, 64};

  void validate() const;
};

// Weights after applying the mode and the state space (continuous state
// spaces have no counts, so w2 = 0).
ScoreWeights effective_weights(const RapidConfig& cfg, bool discrete_observations);

// Linear 1 -> 0 over `horizon`. Throws InvalidInput when horizon <= 0.
double anneal_factor(std::int64_t step, std::int64_t horizon);
int annealed_steps(int steps, double factor);

// reward + beta / sqrt(N(obs)). The count for obs must already include the
// current visit; a zero count throws ContractViolation.
double count_bonus_wrap(double reward, std::span<const float> obs, const CountTable& table, double beta);

struct EpisodeRecord {
  double extrinsic_return = 0.0;
  EpisodeScore score;
  std::size_t length = 0;
  std::size_t distinct_obs = 0;
  std::int64_t end_frame = 0;
};

struct IterationMetrics {
  std::int64_t iteration = 0;
  std::int64_t frames = 0;  // cumulative, after this iteration
  std::vector<EpisodeRecord> episodes;
  PpoUpdateStats ppo;
  double bc_loss = 0.0;  // mean over cloning steps; NaN when none ran
  int bc_steps = 0;
  BufferStats buffer;
  // Instrumentation for the pure-exploration contract.
  double ppo_env_reward = 0.0;   // environment reward that reached PPO
  double ranking_ext_term = 0.0;  // sum of w0 * s_ext over scored episodes
};

/// One seeded training run: environment, networks, optimizers, buffer and
/// count table.
class Trainer {
 public:
  // `anneal_horizon` replaces cfg.rapid.anneal_horizon when the latter is 0.
  Trainer(const EnvSpec& env, const AgentConfig& cfg, std::uint64_t seed, std::int64_t anneal_horizon = 0);

  // One pass of: T environment steps, PPO update, then for every episode
  // completed during the rollout: score, insert, clone.
  IterationMetrics iterate();

  std::int64_t frames() const { return frames_; }
  std::int64_t iteration() const { return iteration_; }
  const AgentConfig& config() const { return cfg_; }
  const Environment& env() const { return *env_; }
  const nn::ActorCritic& params() const { return params_; }
  nn::ActorCritic& mutable_params() { return params_; }
  const RankingBuffer& buffer() const { return buffer_; }
  const CountTable& counts() const { return counts_; }
  const ScoreWeights& weights() const { return weights_; }
  nn::Checkpoint checkpoint() const;

 private:
  struct Pending {
    Episode episode;
    EpisodeScore score;
  };

  EpisodeScore score_episode(const Episode& episode, EpisodeRecord& record);
  double clone_steps(int steps, int& taken);

  AgentConfig cfg_;
  std::unique_ptr<Environment> env_;
  ScoreWeights weights_;
  std::vector<double> obs_scale_;
  std::int64_t anneal_horizon_;

  Rng init_rng_;
  Rng action_rng_;
  Rng update_rng_;
  Rng bc_rng_;

  nn::ActorCritic params_;
  nn::Adam rl_opt_;
  nn::Adam bc_opt_;
  RankingBuffer buffer_;
  CountTable counts_;

  Observation obs_;
  Episode current_;
  std::int64_t episode_index_ = 0;
  std::int64_t frames_ = 0;
  std::int64_t iteration_ = 0;
  RolloutBatch rollout_;
};

// Action choice shared by training and evaluation. `scaled_obs` is a
// [obs_dim x 1] network input.
struct PolicyStep {
  Action action;
  double log_prob = 0.0;
};
PolicyStep sample_action(const nn::ActorCritic& params, const nn::Matrix& scaled_obs, Rng& rng);
Action greedy_action(const nn::ActorCritic& params, const nn::Matrix& scaled_obs);

struct EvalResult {
  double mean_return = 0.0;
  double success_rate = 0.0;  // fraction of episodes with positive return
  double mean_length = 0.0;
  double mean_distinct_obs = 0.0;
  double mean_local_score = 0.0;  // mean of distinct / length per episode
  int episodes = 0;
};

// Runs `episodes` fresh layouts drawn from a stream derived from `seed`.
// Greedy picks the most likely action (or the mean); otherwise actions are
// sampled. Throws InvalidInput when the network and env dimensions differ.
EvalResult evaluate_policy(const nn::ActorCritic& params, const EnvSpec& env, int episodes, std::uint64_t seed,
                           bool greedy = true);

}  // namespace rapid
