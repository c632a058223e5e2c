#include "rapid/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "rapid/environments.hpp"
#include "rapid/errors.hpp"
#include "rapid/rng.hpp"

namespace rapid {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kMultiRoom: return "multiroom";
    case EnvKind::kKeyCorridor: return "keycorridor";
    case EnvKind::kChain: return "chain";
    case EnvKind::kPointMass: return "pointmass";
  }
  return "?";
}

EnvKind parse_env_kind(std::string_view s) {
  if (s == "multiroom") return EnvKind::kMultiRoom;
  if (s == "keycorridor") return EnvKind::kKeyCorridor;
  if (s == "chain") return EnvKind::kChain;
  if (s == "pointmass") return EnvKind::kPointMass;
  throw InvalidInput("unknown env kind '" + std::string(s) + "'");
}

void EnvSpec::validate() const {
  const bool grid = kind == EnvKind::kMultiRoom || kind == EnvKind::kKeyCorridor;
  if (grid && n_rooms < 1) throw InvalidInput("n_rooms must be >= 1");
  if (grid && room_size < 3) throw InvalidInput("room_size must be >= 3");
  if (kind == EnvKind::kChain && chain_length < 2) throw InvalidInput("chain_length must be >= 2");
  if (max_steps && *max_steps < 1) throw InvalidInput("max_steps must be >= 1");
  if (step_penalty && (*step_penalty < 0.0 || *step_penalty > 1.0))
    throw InvalidInput("step_penalty must lie in [0, 1]");
}

int EnvSpec::resolved_max_steps() const {
  if (max_steps) return *max_steps;
  switch (kind) {
    case EnvKind::kMultiRoom: return 20 * n_rooms;
    case EnvKind::kKeyCorridor: return 30 * room_size * room_size;
    case EnvKind::kChain: return chain_length - 1;
    case EnvKind::kPointMass: return 100;
  }
  return 1;
}

double EnvSpec::resolved_step_penalty() const {
  if (step_penalty) return *step_penalty;
  switch (kind) {
    case EnvKind::kMultiRoom:
    case EnvKind::kKeyCorridor: return 0.9;
    case EnvKind::kChain: return 0.0;
    case EnvKind::kPointMass: return 1.0;
  }
  return 0.0;
}

std::string EnvSpec::name() const {
  switch (kind) {
    case EnvKind::kMultiRoom:
      return "MultiRoom-N" + std::to_string(n_rooms) + "-S" + std::to_string(room_size);
    case EnvKind::kKeyCorridor:
      return "KeyCorridor-S" + std::to_string(room_size) + "-R" + std::to_string(n_rooms);
    case EnvKind::kChain: return "Chain-" + std::to_string(chain_length);
    case EnvKind::kPointMass: return "PointMass";
  }
  return "?";
}

namespace {

int parse_int_field(std::string_view token, char prefix, std::string_view whole) {
  if (token.size() < 2 || token.front() != prefix)
    throw InvalidInput("malformed env name '" + std::string(whole) + "'");
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data() + 1, token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw InvalidInput("malformed env name '" + std::string(whole) + "'");
  return v;
}

std::vector<std::string_view> split_dash(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find('-', start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

EnvSpec parse_env_name(std::string_view name) {
  auto parts = split_dash(name);
  if (!parts.empty() && parts.front() == "MiniGrid") parts.erase(parts.begin());
  if (parts.empty()) throw InvalidInput("empty env name");
  EnvSpec spec;
  const std::string_view head = parts.front();
  if (head == "MultiRoom" && parts.size() == 3) {
    spec.kind = EnvKind::kMultiRoom;
    spec.n_rooms = parse_int_field(parts[1], 'N', name);
    spec.room_size = parse_int_field(parts[2], 'S', name);
  } else if (head == "KeyCorridor" && parts.size() == 3) {
    spec.kind = EnvKind::kKeyCorridor;
    spec.room_size = parse_int_field(parts[1], 'S', name);
    spec.n_rooms = parse_int_field(parts[2], 'R', name);
  } else if (head == "Chain" && parts.size() == 2) {
    spec.kind = EnvKind::kChain;
    int len = 0;
    const auto [ptr, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), len);
    if (ec != std::errc{} || ptr != parts[1].data() + parts[1].size())
      throw InvalidInput("malformed env name '" + std::string(name) + "'");
    spec.chain_length = len;
  } else if (head == "PointMass" && parts.size() == 1) {
    spec.kind = EnvKind::kPointMass;
  } else {
    throw InvalidInput("unknown env name '" + std::string(name) + "'");
  }
  spec.validate();
  return spec;
}

double Episode::extrinsic_return() const {
  double total = 0.0;
  for (const auto& t : transitions) total += t.reward;
  return total;
}

std::uint64_t Environment::episode_seed(std::int64_t episode_index) const {
  return derive_seed(spec_.layout_seed_stream, static_cast<std::uint64_t>(episode_index));
}

// ---------------------------------------------------------------------------

GridEnv::GridEnv(EnvSpec spec) : Environment(std::move(spec)) {
  spec_.validate();
  if (spec_.kind != EnvKind::kMultiRoom && spec_.kind != EnvKind::kKeyCorridor)
    throw InvalidInput("GridEnv requires a grid env kind");
}

grid::GridWorld GridEnv::generate(std::int64_t episode_index) const {
  const std::uint64_t seed = episode_seed(episode_index);
  grid::GridWorld w = spec_.kind == EnvKind::kMultiRoom
                          ? grid::generate_multiroom(spec_.n_rooms, spec_.room_size, seed)
                          : grid::generate_keycorridor(spec_.room_size, spec_.n_rooms, seed);
  w.max_steps = spec_.resolved_max_steps();
  w.step_penalty = spec_.resolved_step_penalty();
  return w;
}

Observation GridEnv::observe() const {
  const auto enc = grid::encode_observation(world_);
  return Observation(enc.begin(), enc.end());
}

Observation GridEnv::reset(std::int64_t episode_index) {
  world_ = generate(episode_index);
  started_ = true;
  return observe();
}

StepResult GridEnv::step(const Action& action) {
  if (!started_) throw ContractViolation("GridEnv::step before reset");
  if (action.id < 0 || action.id >= grid::kNumActions)
    throw InvalidInput("grid action out of range: " + std::to_string(action.id));
  const auto r = grid::step_world(world_, static_cast<grid::GridAction>(action.id));
  return {observe(), r.reward, r.done};
}

std::vector<double> GridEnv::obs_scale() const {
  std::vector<double> scale(grid::kObsSize);
  for (int i = 0; i < grid::kObsSize; i += 3) {
    scale[static_cast<std::size_t>(i)] = grid::kMaxObject;
    scale[static_cast<std::size_t>(i + 1)] = grid::kMaxColor;
    scale[static_cast<std::size_t>(i + 2)] = grid::kMaxState;
  }
  return scale;
}

// ---------------------------------------------------------------------------

ChainEnv::ChainEnv(EnvSpec spec) : Environment(std::move(spec)) {
  spec_.validate();
  if (spec_.kind != EnvKind::kChain) throw InvalidInput("ChainEnv requires kind chain");
}

Observation ChainEnv::observe() const {
  Observation obs(static_cast<std::size_t>(obs_dim()), 0.0f);
  obs[static_cast<std::size_t>(position_)] = 1.0f;
  obs.back() = static_cast<float>(appearance_[static_cast<std::size_t>(position_)]);
  return obs;
}

Observation ChainEnv::reset(std::int64_t episode_index) {
  Rng rng(episode_seed(episode_index));
  appearance_.assign(static_cast<std::size_t>(spec_.chain_length), 0);
  for (int& a : appearance_) a = static_cast<int>(rng.uniform_int(0, kNumAppearances));
  position_ = 0;
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult ChainEnv::step(const Action& action) {
  if (done_) throw ContractViolation("ChainEnv::step on a finished episode");
  if (action.id < 0 || action.id > 1)
    throw InvalidInput("chain action out of range: " + std::to_string(action.id));
  ++steps_;
  position_ = std::clamp(position_ + (action.id == 1 ? 1 : -1), 0, goal());
  StepResult out;
  const int max_steps = spec_.resolved_max_steps();
  if (position_ == goal()) {
    out.done = true;
    out.reward = 1.0 - spec_.resolved_step_penalty() * steps_ / static_cast<double>(max_steps);
  }
  if (steps_ >= max_steps) out.done = true;
  done_ = out.done;
  out.obs = observe();
  return out;
}

std::vector<double> ChainEnv::obs_scale() const {
  std::vector<double> scale(static_cast<std::size_t>(obs_dim()), 1.0);
  scale.back() = kNumAppearances - 1;
  return scale;
}

// ---------------------------------------------------------------------------

PointMassEnv::PointMassEnv(EnvSpec spec) : Environment(std::move(spec)) {
  spec_.validate();
  if (spec_.kind != EnvKind::kPointMass) throw InvalidInput("PointMassEnv requires kind pointmass");
}

Observation PointMassEnv::observe() const {
  return {static_cast<float>(pos_[0]), static_cast<float>(pos_[1]), static_cast<float>(vel_[0]),
          static_cast<float>(vel_[1])};
}

Observation PointMassEnv::reset(std::int64_t episode_index) {
  Rng rng(episode_seed(episode_index));
  const auto corner = rng.uniform_int(0, 4);
  const double lo = kCornerInset;
  const double hi = 1.0 - kCornerInset;
  const double sx = (corner & 1) ? hi : lo;
  const double sy = (corner & 2) ? hi : lo;
  pos_ = {sx, sy};
  goal_ = {lo + hi - sx, lo + hi - sy};
  vel_ = {0.0, 0.0};
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult PointMassEnv::step(const Action& action) {
  if (done_) throw ContractViolation("PointMassEnv::step on a finished episode");
  if (action.values.size() != 2)
    throw InvalidInput("pointmass action must have 2 components");
  ++steps_;
  for (int d = 0; d < 2; ++d) {
    const double a = std::clamp(action.values[static_cast<std::size_t>(d)], -1.0, 1.0);
    vel_[d] = kDamping * vel_[d] + kDt * a;
    pos_[d] += kDt * vel_[d];
    if (pos_[d] < 0.0 || pos_[d] > 1.0) {
      pos_[d] = std::clamp(pos_[d], 0.0, 1.0);
      vel_[d] = 0.0;
    }
  }
  StepResult out;
  const int max_steps = spec_.resolved_max_steps();
  if (std::hypot(pos_[0] - goal_[0], pos_[1] - goal_[1]) <= kGoalRadius) {
    out.done = true;
    out.reward = 1.0 - spec_.resolved_step_penalty() * steps_ / static_cast<double>(max_steps);
  }
  if (steps_ >= max_steps) out.done = true;
  done_ = out.done;
  out.obs = observe();
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::kMultiRoom:
    case EnvKind::kKeyCorridor: return std::make_unique<GridEnv>(spec);
    case EnvKind::kChain: return std::make_unique<ChainEnv>(spec);
    case EnvKind::kPointMass: return std::make_unique<PointMassEnv>(spec);
  }
  throw InvalidInput("unknown env kind");
}

}  // namespace rapid
