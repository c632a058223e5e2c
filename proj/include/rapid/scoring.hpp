#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "rapid/env.hpp"

namespace rapid {

// FNV-1a over the raw bytes of the observation values.
std::uint64_t hash_observation(std::span<const float> obs);

struct ObservationHash {
  std::size_t operator()(const Observation& obs) const {
    return static_cast<std::size_t>(hash_observation(obs));
  }
};

/// Lifetime visit counts N(s), keyed by observation hash.
class CountTable {
 public:
  void add(std::span<const float> obs);
  std::uint64_t count(std::span<const float> obs) const;

  std::uint64_t total_insertions() const { return total_; }
  std::size_t distinct_states() const { return counts_.size(); }

  // One "hash count" line per state, sorted by hash. Debug aid only.
  void dump(std::ostream& out) const;

 private:
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct ScoreWeights {
  double w0 = 1.0;    // extrinsic
  double w1 = 0.1;    // local
  double w2 = 0.001;  // global
};

struct EpisodeScore {
  double s_ext = 0.0;
  double s_local = 0.0;
  double s_global = 0.0;
  double s_total = 0.0;
};

// Distinct / total observations. Throws InvalidInput on an empty sequence.
double local_score_discrete(std::span<const Observation> states);
double local_score_discrete(const Episode& episode);

// Mean over dimensions of the population standard deviation of each
// dimension. Throws InvalidInput on empty input or mismatched dimensions.
double local_score_continuous(std::span<const Observation> states);
double local_score_continuous(const Episode& episode);

// Fraction of an environment's cells visited: |distinct positions| / n_cells.
double coverage_rate(std::span<const int> positions, int n_cells);

void update_counts(CountTable& table, std::span<const Observation> states);
void update_counts(CountTable& table, const Episode& episode);

// Mean of 1/sqrt(N(s)) over the sequence. The counts for these states must
// already include this episode; a zero count throws ContractViolation.
double global_score(const CountTable& table, std::span<const Observation> states);
double global_score(const CountTable& table, const Episode& episode);

double episodic_score(double s_ext, double s_local, double s_global, const ScoreWeights& w);

// Observations of an episode in time order (the state at every timestep).
std::vector<Observation> episode_states(const Episode& episode);

}  // namespace rapid
