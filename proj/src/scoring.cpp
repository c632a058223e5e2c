#include "rapid/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <unordered_set>

#include "rapid/errors.hpp"

namespace rapid {

std::uint64_t hash_observation(std::span<const float> obs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(obs.data());
  for (std::size_t i = 0; i < obs.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void CountTable::add(std::span<const float> obs) {
  ++counts_[hash_observation(obs)];
  ++total_;
}

std::uint64_t CountTable::count(std::span<const float> obs) const {
  const auto it = counts_.find(hash_observation(obs));
  return it == counts_.end() ? 0 : it->second;
}

void CountTable::dump(std::ostream& out) const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows(counts_.begin(), counts_.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [h, n] : rows) out << std::hex << h << std::dec << ' ' << n << '\n';
}

std::vector<Observation> episode_states(const Episode& episode) {
  std::vector<Observation> states;
  states.reserve(episode.transitions.size());
  for (const auto& t : episode.transitions) states.push_back(t.obs);
  return states;
}

double local_score_discrete(std::span<const Observation> states) {
  if (states.empty()) throw InvalidInput("local_score_discrete: empty episode");
  std::unordered_set<Observation, ObservationHash> distinct(states.begin(), states.end());
  return static_cast<double>(distinct.size()) / static_cast<double>(states.size());
}

double local_score_discrete(const Episode& episode) {
  return local_score_discrete(episode_states(episode));
}

double local_score_continuous(std::span<const Observation> states) {
  if (states.empty()) throw InvalidInput("local_score_continuous: empty episode");
  const std::size_t dim = states.front().size();
  if (dim == 0) throw InvalidInput("local_score_continuous: zero-dimensional state");
  for (const auto& s : states) {
    if (s.size() != dim) throw InvalidInput("local_score_continuous: dimension mismatch");
  }
  const double n = static_cast<double>(states.size());
  double total_std = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (const auto& s : states) mean += s[d];
    mean /= n;
    double var = 0.0;
    for (const auto& s : states) {
      const double diff = s[d] - mean;
      var += diff * diff;
    }
    total_std += std::sqrt(var / n);
  }
  return total_std / static_cast<double>(dim);
}

double local_score_continuous(const Episode& episode) {
  return local_score_continuous(episode_states(episode));
}

double coverage_rate(std::span<const int> positions, int n_cells) {
  if (n_cells <= 0) throw InvalidInput("coverage_rate: n_cells must be positive");
  std::unordered_set<int> seen(positions.begin(), positions.end());
  return static_cast<double>(seen.size()) / n_cells;
}

void update_counts(CountTable& table, std::span<const Observation> states) {
  for (const auto& s : states) table.add(s);
}

void update_counts(CountTable& table, const Episode& episode) {
  for (const auto& t : episode.transitions) table.add(t.obs);
}

double global_score(const CountTable& table, std::span<const Observation> states) {
  if (states.empty()) throw InvalidInput("global_score: empty episode");
  double sum = 0.0;
  for (const auto& s : states) {
    const auto n = table.count(s);
    if (n == 0) throw ContractViolation("global_score: state with zero count (update_counts not applied)");
    sum += 1.0 / std::sqrt(static_cast<double>(n));
  }
  return sum / static_cast<double>(states.size());
}

double global_score(const CountTable& table, const Episode& episode) {
  return global_score(table, episode_states(episode));
}

double episodic_score(double s_ext, double s_local, double s_global, const ScoreWeights& w) {
  return w.w0 * s_ext + w.w1 * s_local + w.w2 * s_global;
}

}  // namespace rapid
