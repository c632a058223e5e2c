#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rapid {

// Raw observation values. Grid and chain observations hold small integers
// stored exactly; pointmass observations hold real coordinates.
using Observation = std::vector<float>;

enum class EnvKind { kMultiRoom, kKeyCorridor, kChain, kPointMass };

struct EnvSpec {
  EnvKind kind = EnvKind::kMultiRoom;
  int n_rooms = 2;    // MultiRoom: rooms (N). KeyCorridor: rows (R).
  int room_size = 4;  // MultiRoom: max room size (S). KeyCorridor: room size (S).
  int chain_length = 8;
  std::optional<int> max_steps;        // unset selects the kind default
  std::optional<double> step_penalty;  // unset selects the kind default
  std::uint64_t layout_seed_stream = 0;

  // Throws InvalidInput when a field is out of range.
  void validate() const;

  int resolved_max_steps() const;
  double resolved_step_penalty() const;

  // Canonical name, e.g. "MultiRoom-N2-S4", "KeyCorridor-S3-R2", "Chain-8".
  std::string name() const;
};

// Parses a canonical env name (see EnvSpec::name). Throws InvalidInput.
EnvSpec parse_env_name(std::string_view name);

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view s);

struct Action {
  int id = 0;                  // discrete action index
  std::vector<double> values;  // continuous action vector
};

struct ActionSpace {
  bool continuous = false;
  int size = 0;  // number of actions, or action dimension when continuous
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
};

struct Transition {
  Observation obs;
  Action action;
  double reward = 0.0;
  bool done = false;
};

struct Episode {
  std::vector<Transition> transitions;
  std::uint64_t episode_seed = 0;

  std::size_t size() const { return transitions.size(); }
  double extrinsic_return() const;
};

/// A single-threaded episodic environment. Each reset draws a fresh layout
/// determined by (spec.layout_seed_stream, episode_index).
class Environment {
 public:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual ~Environment() = default;

  virtual Observation reset(std::int64_t episode_index) = 0;
  // Throws ContractViolation if the episode is already finished.
  virtual StepResult step(const Action& action) = 0;

  virtual int obs_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  // Per-component divisor mapping raw observations into network inputs.
  virtual std::vector<double> obs_scale() const = 0;
  // True when observations are countable (discrete state space).
  virtual bool discrete_observations() const = 0;

  const EnvSpec& spec() const { return spec_; }
  std::uint64_t episode_seed(std::int64_t episode_index) const;

 protected:
  EnvSpec spec_;
};

std::unique_ptr<Environment> make_environment(const EnvSpec& spec);

}  // namespace rapid
