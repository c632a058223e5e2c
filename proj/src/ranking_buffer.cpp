#include "rapid/ranking_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "rapid/errors.hpp"

namespace rapid {

RankingBuffer::RankingBuffer(std::size_t capacity, BufferMode mode, bool keep_whole_episodes)
    : capacity_(capacity), mode_(mode), keep_whole_episodes_(keep_whole_episodes) {}

void RankingBuffer::insert_episode(const Episode& episode, double score) {
  if (!std::isfinite(score)) throw InvalidInput("insert_episode: score must be finite");
  if (episode.transitions.empty()) return;

  const std::uint64_t episode_id = next_episode_++;
  std::vector<ScoredPair> block;
  block.reserve(episode.transitions.size());
  for (const auto& t : episode.transitions) {
    block.push_back(ScoredPair{t.obs, t.action, score, next_seq_++, episode_id});
  }

  if (mode_ == BufferMode::kFifo) {
    pairs_.insert(pairs_.end(), std::make_move_iterator(block.begin()),
                  std::make_move_iterator(block.end()));
    if (pairs_.size() > capacity_) {
      const auto excess = static_cast<std::ptrdiff_t>(pairs_.size() - capacity_);
      pairs_.erase(pairs_.begin(), pairs_.begin() + excess);
    }
    return;
  }

  // The new pairs carry the largest seqs so far, so they rank above every
  // stored pair with score <= the new score. Within the block, higher seq
  // comes first.
  std::reverse(block.begin(), block.end());
  const auto pos = std::find_if(pairs_.begin(), pairs_.end(),
                                [score](const ScoredPair& p) { return p.score <= score; });
  pairs_.insert(pos, std::make_move_iterator(block.begin()), std::make_move_iterator(block.end()));
  truncate_ranked();
}

void RankingBuffer::truncate_ranked() {
  if (pairs_.size() <= capacity_) return;
  std::size_t keep = capacity_;
  if (keep_whole_episodes_ && keep > 0) {
    // Pairs of one episode are contiguous: same score, consecutive seqs.
    const std::uint64_t boundary_episode = pairs_[keep - 1].episode;
    while (keep < pairs_.size() && pairs_[keep].episode == boundary_episode) ++keep;
  }
  pairs_.resize(keep);
}

std::vector<const ScoredPair*> RankingBuffer::sample_batch(std::size_t batch_size, Rng& rng) const {
  if (pairs_.empty()) throw InvalidInput("sample_batch: buffer is empty");
  std::vector<const ScoredPair*> batch;
  batch.reserve(batch_size);
  const auto n = static_cast<std::int64_t>(pairs_.size());
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch.push_back(&pairs_[static_cast<std::size_t>(rng.uniform_int(0, n))]);
  }
  return batch;
}

double RankingBuffer::min_score() const {
  if (pairs_.empty()) throw InvalidInput("min_score: buffer is empty");
  if (mode_ == BufferMode::kRanked) return pairs_.back().score;
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs_) m = std::min(m, p.score);
  return m;
}

BufferStats RankingBuffer::stats() const {
  BufferStats s;
  s.len = pairs_.size();
  if (pairs_.empty()) {
    s.min_score = s.max_score = s.mean_score = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.min_score = std::numeric_limits<double>::infinity();
  s.max_score = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& p : pairs_) {
    s.min_score = std::min(s.min_score, p.score);
    s.max_score = std::max(s.max_score, p.score);
    sum += p.score;
  }
  s.mean_score = sum / static_cast<double>(pairs_.size());
  return s;
}

}  // namespace rapid
