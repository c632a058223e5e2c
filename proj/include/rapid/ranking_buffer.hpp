#pragma once

#include <cstdint>
#include <vector>

#include "rapid/env.hpp"
#include "rapid/rng.hpp"

namespace rapid {

struct ScoredPair {
  Observation obs;
  Action action;
  double score = 0.0;
  std::uint64_t seq = 0;      // global insertion counter, unique
  std::uint64_t episode = 0;  // insertion-order id of the source episode
};

enum class BufferMode { kRanked, kFifo };

struct BufferStats {
  std::size_t len = 0;
  double min_score = 0.0;
  double max_score = 0.0;
  double mean_score = 0.0;
};

/// Bounded store of state-action pairs for behavior cloning.
///
/// Ranked mode keeps the top `capacity` pairs under the key (score, seq),
/// so ties go to the newer pair. With keep_whole_episodes the cut is moved
/// past the end of the lowest retained episode, letting the buffer exceed
/// capacity rather than hold a partial episode. Fifo mode evicts the oldest
/// pairs and never looks at scores.
class RankingBuffer {
 public:
  RankingBuffer(std::size_t capacity, BufferMode mode = BufferMode::kRanked,
                bool keep_whole_episodes = false);

  // Throws InvalidInput when the score is not finite.
  void insert_episode(const Episode& episode, double score);

  // Uniform sampling with replacement. Throws InvalidInput when empty.
  std::vector<const ScoredPair*> sample_batch(std::size_t batch_size, Rng& rng) const;

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::size_t capacity() const { return capacity_; }
  BufferMode mode() const { return mode_; }

  // Throws InvalidInput when empty.
  double min_score() const;
  BufferStats stats() const;

  // Ranked mode: descending (score, seq). Fifo mode: insertion order.
  const std::vector<ScoredPair>& pairs() const { return pairs_; }

 private:
  void truncate_ranked();

  std::size_t capacity_;
  BufferMode mode_;
  bool keep_whole_episodes_;
  std::vector<ScoredPair> pairs_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_episode_ = 0;
};

}  // namespace rapid
