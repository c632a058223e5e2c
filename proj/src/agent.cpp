#include "rapid/agent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>

#include "rapid/errors.hpp"

namespace rapid {

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 10> kModeNames{{
    {Mode::kFull, "full"},
    {Mode::kNoLocal, "no_local"},
    {Mode::kNoGlobal, "no_global"},
    {Mode::kNoExt, "no_ext"},
    {Mode::kNoBuffer, "no_buffer"},
    {Mode::kNoRanking, "no_ranking"},
    {Mode::kPureExploration, "pure_exploration"},
    {Mode::kBcOnly, "bc_only"},
    {Mode::kPpo, "ppo"},
    {Mode::kCount, "count"},
}};

std::size_t count_distinct(const Episode& episode) {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& t : episode.transitions) seen.insert(hash_observation(t.obs));
  return seen.size();
}

nn::Matrix single_input(const Observation& obs, std::span<const double> scale) {
  const Observation* p = &obs;
  return stack_observations(std::span<const Observation* const>(&p, 1), scale);
}

}  // namespace

std::string_view to_string(Mode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

Mode parse_mode(std::string_view s) {
  for (const auto& [m, name] : kModeNames) {
    if (name == s) return m;
  }
  std::string accepted;
  for (const auto& [m, name] : kModeNames) {
    if (!accepted.empty()) accepted += ", ";
    accepted += name;
  }
  throw InvalidInput("unknown mode '" + std::string(s) + "' (expected one of: " + accepted + ")");
}

bool uses_buffer(Mode mode) {
  return mode != Mode::kNoBuffer && mode != Mode::kPpo && mode != Mode::kCount;
}

void RapidConfig::validate() const {
  for (double w : {weights.w0, weights.w1, weights.w2}) {
    if (!std::isfinite(w)) throw InvalidInput("score weights must be finite");
  }
  if (buffer_size < 1) throw InvalidInput("rapid.buffer_size must be >= 1");
  if (bc_steps < 0) throw InvalidInput("rapid.bc_steps must be >= 0");
  if (bc_batch < 1) throw InvalidInput("rapid.bc_batch must be >= 1");
  if (anneal_horizon < 0) throw InvalidInput("rapid.anneal_horizon must be >= 0");
  if (!std::isfinite(count_bonus_coeff) || count_bonus_coeff < 0.0)
    throw InvalidInput("rapid.count_bonus_coeff must be finite and >= 0");
}

void AgentConfig::validate() const {
  ppo.validate();
  rapid.validate();
  if (hidden.empty()) throw InvalidInput("hidden layer list must not be empty");
  for (int h : hidden) {
    if (h < 1) throw InvalidInput("hidden layer sizes must be >= 1");
  }
}

ScoreWeights effective_weights(const RapidConfig& cfg, bool discrete_observations) {
  ScoreWeights w = cfg.weights;
  switch (cfg.mode) {
    case Mode::kNoLocal: w.w1 = 0.0; break;
    case Mode::kNoGlobal: w.w2 = 0.0; break;
    case Mode::kNoExt:
    case Mode::kPureExploration: w.w0 = 0.0; break;
    default: break;
  }
  if (!discrete_observations) w.w2 = 0.0;
  return w;
}

double anneal_factor(std::int64_t step, std::int64_t horizon) {
  if (horizon <= 0) throw InvalidInput("anneal_factor: horizon must be > 0");
  if (step <= 0) return 1.0;
  if (step >= horizon) return 0.0;
  return 1.0 - static_cast<double>(step) / static_cast<double>(horizon);
}

int annealed_steps(int steps, double factor) {
  return static_cast<int>(std::lround(static_cast<double>(steps) * factor));
}

double count_bonus_wrap(double reward, std::span<const float> obs, const CountTable& table, double beta) {
  const std::uint64_t n = table.count(obs);
  if (n == 0) throw ContractViolation("count_bonus_wrap: observation has not been counted");
  return reward + beta / std::sqrt(static_cast<double>(n));
}

PolicyStep sample_action(const nn::ActorCritic& params, const nn::Matrix& scaled_obs, Rng& rng) {
  const nn::Matrix out = nn::forward(params.policy, scaled_obs);
  const nn::Vector head = out.col(0);
  PolicyStep ps;
  if (!params.continuous) {
    ps.action.id = nn::categorical_sample(head, rng);
    ps.log_prob = nn::categorical_log_prob(head, ps.action.id);
  } else {
    ps.action.values = nn::gaussian_sample(head, params.log_std, rng);
    ps.log_prob = nn::gaussian_log_prob(head, params.log_std, ps.action.values);
  }
  return ps;
}

Action greedy_action(const nn::ActorCritic& params, const nn::Matrix& scaled_obs) {
  const nn::Matrix out = nn::forward(params.policy, scaled_obs);
  Action a;
  if (!params.continuous) {
    a.id = nn::categorical_mode(out.col(0));
  } else {
    a.values.assign(out.data(), out.data() + out.rows());
  }
  return a;
}

Trainer::Trainer(const EnvSpec& env, const AgentConfig& cfg, std::uint64_t seed, std::int64_t anneal_horizon)
    : cfg_(cfg),
      init_rng_(derive_seed(seed, "init")),
      action_rng_(derive_seed(seed, "action")),
      update_rng_(derive_seed(seed, "ppo")),
      bc_rng_(derive_seed(seed, "bc")),
      rl_opt_(cfg.ppo.lr),
      bc_opt_(cfg.ppo.lr),
      buffer_(cfg.rapid.buffer_size,
              cfg.rapid.mode == Mode::kNoRanking ? BufferMode::kFifo : BufferMode::kRanked,
              cfg.rapid.keep_whole_episodes) {
  cfg_.validate();
  EnvSpec spec = env;
  spec.layout_seed_stream = derive_seed(derive_seed(seed, "layout"), env.layout_seed_stream);
  env_ = make_environment(spec);
  weights_ = effective_weights(cfg_.rapid, env_->discrete_observations());
  obs_scale_ = env_->obs_scale();
  anneal_horizon_ = cfg_.rapid.anneal_horizon > 0 ? cfg_.rapid.anneal_horizon : anneal_horizon;
  if (cfg_.rapid.anneal && anneal_horizon_ <= 0)
    throw InvalidInput("annealing requires a positive horizon (set rapid.anneal_horizon or total_frames)");

  params_ = nn::ActorCritic::create(env_->obs_dim(), env_->action_space(), cfg_.hidden, init_rng_);
  obs_ = env_->reset(episode_index_);
  if (cfg_.rapid.mode == Mode::kCount) counts_.add(obs_);
  current_.episode_seed = env_->episode_seed(episode_index_);
}

nn::Checkpoint Trainer::checkpoint() const { return nn::Checkpoint{params_, rl_opt_, bc_opt_}; }

EpisodeScore Trainer::score_episode(const Episode& episode, EpisodeRecord& record) {
  EpisodeScore s;
  s.s_ext = episode.extrinsic_return();
  record.extrinsic_return = s.s_ext;
  record.length = episode.size();
  if (env_->discrete_observations()) {
    s.s_local = local_score_discrete(episode);
    // The count baseline already counts every visited observation per step.
    if (cfg_.rapid.mode != Mode::kCount) update_counts(counts_, episode);
    s.s_global = global_score(counts_, episode);
    record.distinct_obs = count_distinct(episode);
  } else {
    s.s_local = local_score_continuous(episode);
    s.s_global = 0.0;
    record.distinct_obs = count_distinct(episode);
  }
  s.s_total = episodic_score(s.s_ext, s.s_local, s.s_global, weights_);
  record.score = s;
  return s;
}

double Trainer::clone_steps(int steps, int& taken) {
  double loss_sum = 0.0;
  if (buffer_.empty()) return loss_sum;
  const auto batch_size = static_cast<std::size_t>(cfg_.rapid.bc_batch);
  nn::ActorCritic grads = params_.zeros_like();
  std::vector<const Observation*> obs_ptrs(batch_size);
  for (int k = 0; k < steps; ++k) {
    const auto pairs = buffer_.sample_batch(batch_size, bc_rng_);
    PolicyBatch batch;
    for (std::size_t i = 0; i < batch_size; ++i) obs_ptrs[i] = &pairs[i]->obs;
    batch.obs = stack_observations(std::span<const Observation* const>(obs_ptrs), obs_scale_);
    if (params_.continuous) {
      batch.continuous_actions.resize(params_.action_dim(), static_cast<Eigen::Index>(batch_size));
      for (std::size_t i = 0; i < batch_size; ++i) {
        for (int d = 0; d < params_.action_dim(); ++d)
          batch.continuous_actions(d, static_cast<Eigen::Index>(i)) = pairs[i]->action.values[static_cast<std::size_t>(d)];
      }
    } else {
      batch.actions.reserve(batch_size);
      for (const auto* p : pairs) batch.actions.push_back(p->action.id);
    }
    grads.set_zero();
    loss_sum += bc_loss(params_, batch, &grads);
    nn::check_finite(std::as_const(grads).policy_parameters(), "behavior cloning gradient");
    bc_opt_.step(params_.policy_parameters(), std::as_const(grads).policy_parameters());
    ++taken;
  }
  return loss_sum;
}

IterationMetrics Trainer::iterate() {
  const Mode mode = cfg_.rapid.mode;
  IterationMetrics m;
  m.iteration = iteration_;
  rollout_.clear();
  std::vector<Pending> finished;

  for (int t = 0; t < cfg_.ppo.nstep; ++t) {
    const nn::Matrix x = single_input(obs_, obs_scale_);
    const double value = nn::forward(params_.value, x)(0, 0);
    PolicyStep ps = sample_action(params_, x, action_rng_);
    StepResult sr = env_->step(ps.action);
    ++frames_;

    double reward = mode == Mode::kPureExploration ? 0.0 : sr.reward;
    m.ppo_env_reward += reward;
    if (mode == Mode::kCount) {
      counts_.add(sr.obs);
      reward = count_bonus_wrap(reward, sr.obs, counts_, cfg_.rapid.count_bonus_coeff);
    }

    rollout_.obs.push_back(obs_);
    rollout_.actions.push_back(ps.action);
    rollout_.rewards.push_back(reward);
    rollout_.dones.push_back(sr.done ? 1 : 0);
    rollout_.values.push_back(value);
    rollout_.log_probs.push_back(ps.log_prob);
    current_.transitions.push_back(Transition{std::move(obs_), std::move(ps.action), sr.reward, sr.done});

    if (sr.done) {
      EpisodeRecord record;
      const EpisodeScore score = score_episode(current_, record);
      record.end_frame = frames_;
      m.episodes.push_back(record);
      m.ranking_ext_term += weights_.w0 * score.s_ext;
      if (mode == Mode::kNoBuffer) rollout_.rewards.back() += score.s_total;
      finished.push_back(Pending{std::move(current_), score});

      current_ = Episode{};
      ++episode_index_;
      current_.episode_seed = env_->episode_seed(episode_index_);
      obs_ = env_->reset(episode_index_);
      if (mode == Mode::kCount) counts_.add(obs_);
    } else {
      obs_ = std::move(sr.obs);
    }
  }
  rollout_.bootstrap_value = nn::forward(params_.value, single_input(obs_, obs_scale_))(0, 0);

  const bool bc_only = mode == Mode::kBcOnly;
  m.ppo = ppo_update(params_, rl_opt_, rollout_, cfg_.ppo, bc_only ? 0.0 : 1.0, bc_only ? 0.0 : cfg_.ppo.ent_coef,
                     obs_scale_, update_rng_);

  double bc_sum = 0.0;
  if (uses_buffer(mode)) {
    for (const auto& p : finished) {
      buffer_.insert_episode(p.episode, p.score.s_total);
      int steps = cfg_.rapid.bc_steps;
      if (cfg_.rapid.anneal) steps = annealed_steps(steps, anneal_factor(frames_, anneal_horizon_));
      bc_sum += clone_steps(steps, m.bc_steps);
    }
  }
  m.bc_loss = m.bc_steps > 0 ? bc_sum / m.bc_steps : std::numeric_limits<double>::quiet_NaN();
  m.buffer = buffer_.stats();
  m.frames = frames_;
  ++iteration_;
  return m;
}

EvalResult evaluate_policy(const nn::ActorCritic& params, const EnvSpec& env, int episodes, std::uint64_t seed,
                           bool greedy) {
  if (episodes < 1) throw InvalidInput("evaluate: episodes must be >= 1");
  EnvSpec spec = env;
  spec.layout_seed_stream = derive_seed(seed, "eval-layout");
  auto environment = make_environment(spec);
  const ActionSpace space = environment->action_space();
  if (params.obs_dim() != environment->obs_dim() || params.action_dim() != space.size ||
      params.continuous != space.continuous) {
    throw InvalidInput("evaluate: checkpoint expects obs_dim " + std::to_string(params.obs_dim()) +
                       " and action_dim " + std::to_string(params.action_dim()) + ", environment " + spec.name() +
                       " has obs_dim " + std::to_string(environment->obs_dim()) + " and action_dim " +
                       std::to_string(space.size));
  }
  const std::vector<double> scale = environment->obs_scale();
  Rng rng(derive_seed(seed, "eval-action"));

  EvalResult r;
  r.episodes = episodes;
  for (int i = 0; i < episodes; ++i) {
    Observation obs = environment->reset(i);
    std::unordered_set<std::uint64_t> seen;
    double ret = 0.0;
    std::size_t length = 0;
    bool done = false;
    while (!done) {
      seen.insert(hash_observation(obs));
      const nn::Matrix x = single_input(obs, scale);
      const Action a = greedy ? greedy_action(params, x) : sample_action(params, x, rng).action;
      StepResult sr = environment->step(a);
      ret += sr.reward;
      ++length;
      done = sr.done;
      obs = std::move(sr.obs);
    }
    r.mean_return += ret;
    if (ret > 0.0) r.success_rate += 1.0;
    r.mean_length += static_cast<double>(length);
    r.mean_distinct_obs += static_cast<double>(seen.size());
    r.mean_local_score += static_cast<double>(seen.size()) / static_cast<double>(length);
  }
  const double inv = 1.0 / episodes;
  r.mean_return *= inv;
  r.success_rate *= inv;
  r.mean_length *= inv;
  r.mean_distinct_obs *= inv;
  r.mean_local_score *= inv;
  return r;
}

}  // namespace rapid
