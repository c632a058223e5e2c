#pragma once

#include <array>

#include "rapid/env.hpp"
#include "rapid/grid_world.hpp"

namespace rapid {

// MultiRoom and KeyCorridor behind the Environment interface.
class GridEnv final : public Environment {
 public:
  explicit GridEnv(EnvSpec spec);

  Observation reset(std::int64_t episode_index) override;
  StepResult step(const Action& action) override;
  int obs_dim() const override { return grid::kObsSize; }
  ActionSpace action_space() const override { return {false, grid::kNumActions}; }
  std::vector<double> obs_scale() const override;
  bool discrete_observations() const override { return true; }

  const grid::GridWorld& world() const { return world_; }
  grid::GridWorld& mutable_world() { return world_; }

  // Builds the layout for one episode without touching environment state.
  grid::GridWorld generate(std::int64_t episode_index) const;

 private:
  Observation observe() const;
  grid::GridWorld world_;
  bool started_ = false;
};

/// 1-D chain of cells. The agent starts in cell 0 and must reach the last
/// cell. Every cell carries a per-episode appearance id in [0, 10), so the
/// same position looks different from episode to episode.
///
/// Observation: one-hot position (chain_length values) followed by the
/// appearance id of the current cell. Actions: 0 = left, 1 = right.
class ChainEnv final : public Environment {
 public:
  static constexpr int kNumAppearances = 10;

  explicit ChainEnv(EnvSpec spec);

  Observation reset(std::int64_t episode_index) override;
  StepResult step(const Action& action) override;
  int obs_dim() const override { return spec_.chain_length + 1; }
  ActionSpace action_space() const override { return {false, 2}; }
  std::vector<double> obs_scale() const override;
  bool discrete_observations() const override { return true; }

  int position() const { return position_; }
  int goal() const { return spec_.chain_length - 1; }
  const std::vector<int>& appearances() const { return appearance_; }

 private:
  Observation observe() const;
  std::vector<int> appearance_;
  int position_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// Sparse continuous point-mass in the unit box: damped double integrator,
// 2-D force in [-1, 1]^2, start and goal in opposite corners. Observation is
// (x, y, vx, vy).
class PointMassEnv final : public Environment {
 public:
  static constexpr double kGoalRadius = 0.1;
  static constexpr double kDt = 0.1;
  static constexpr double kDamping = 0.9;
  static constexpr double kCornerInset = 0.1;

  explicit PointMassEnv(EnvSpec spec);

  Observation reset(std::int64_t episode_index) override;
  StepResult step(const Action& action) override;
  int obs_dim() const override { return 4; }
  ActionSpace action_space() const override { return {true, 2}; }
  std::vector<double> obs_scale() const override { return {1.0, 1.0, 1.0, 1.0}; }
  bool discrete_observations() const override { return false; }

  const std::array<double, 2>& position() const { return pos_; }
  const std::array<double, 2>& goal() const { return goal_; }

 private:
  Observation observe() const;
  std::array<double, 2> pos_{};
  std::array<double, 2> vel_{};
  std::array<double, 2> goal_{};
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace rapid
