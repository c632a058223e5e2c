#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "rapid/environments.hpp"
#include "rapid/errors.hpp"
#include "rapid/scoring.hpp"

using namespace rapid;

namespace {

Observation ob(std::initializer_list<float> v) { return Observation(v); }

std::vector<Observation> random_states(Rng& rng, int n, int alphabet) {
  std::vector<Observation> s;
  for (int i = 0; i < n; ++i) s.push_back(ob({static_cast<float>(rng.uniform_int(0, alphabet)), 1.0f}));
  return s;
}

}  // namespace

TEST(LocalScoreTest, DirectExamples) {
  std::vector<Observation> s;
  for (int i = 0; i < 8; ++i) s.push_back(ob({static_cast<float>(i)}));
  s.push_back(ob({0.0f}));
  s.push_back(ob({1.0f}));
  EXPECT_DOUBLE_EQ(local_score_discrete(s), 0.8);

  s.resize(8);
  EXPECT_DOUBLE_EQ(local_score_discrete(s), 1.0);
  EXPECT_THROW(local_score_discrete(std::vector<Observation>{}), InvalidInput);
}

TEST(LocalScoreTest, ChainCoverageOfSevenOfEightCells) {
  const std::vector<int> visited{0, 1, 2, 3, 4, 5, 6, 5, 4};
  EXPECT_DOUBLE_EQ(coverage_rate(visited, 8), 0.875);
}

TEST(LocalScoreTest, ContinuousExamples) {
  const std::vector<Observation> same(5, ob({0.3f, -1.0f}));
  EXPECT_EQ(local_score_continuous(same), 0.0);
  EXPECT_DOUBLE_EQ(local_score_continuous(std::vector<Observation>{ob({0.0f}), ob({2.0f})}), 1.0);
  EXPECT_THROW(local_score_continuous(std::vector<Observation>{ob({0.0f}), ob({1.0f, 2.0f})}), InvalidInput);
}

TEST(LocalScoreTest, ContinuousMatchesTwoPassOracleOnPointMass) {
  PointMassEnv env(parse_env_name("PointMass"));
  Rng rng(17);
  Episode ep;
  Observation obs = env.reset(0);
  for (int t = 0; t < 50; ++t) {
    Action a{0, {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    auto r = env.step(a);
    ep.transitions.push_back({obs, a, r.reward, r.done});
    obs = r.obs;
    if (r.done) break;
  }
  double oracle = 0.0;
  for (int d = 0; d < 4; ++d) {
    long double mean = 0;
    for (auto& t : ep.transitions) mean += t.obs[d];
    mean /= ep.size();
    long double var = 0;
    for (auto& t : ep.transitions) var += (t.obs[d] - mean) * (t.obs[d] - mean);
    oracle += std::sqrt(static_cast<double>(var / ep.size()));
  }
  oracle /= 4;
  EXPECT_NEAR(local_score_continuous(ep), oracle, 1e-12);
}

TEST(CountTableTest, CountsAccumulate) {
  CountTable t;
  std::vector<Observation> ep;
  for (int i = 0; i < 5; ++i) ep.push_back(ob({static_cast<float>(i)}));
  update_counts(t, ep);
  for (const auto& o : ep) EXPECT_EQ(t.count(o), 1u);
  update_counts(t, ep);
  for (const auto& o : ep) EXPECT_EQ(t.count(o), 2u);
  EXPECT_EQ(t.total_insertions(), 10u);
  EXPECT_EQ(t.distinct_states(), 5u);
  EXPECT_EQ(t.count(ob({99.0f})), 0u);
}

TEST(CountTableTest, InterleavedEpisodesMatchTally) {
  Rng rng(5);
  CountTable t;
  std::map<std::vector<float>, std::uint64_t> tally;
  for (int e = 0; e < 50; ++e) {
    const auto states = random_states(rng, static_cast<int>(rng.uniform_int(1, 30)), 12);
    update_counts(t, states);
    for (const auto& s : states) ++tally[s];
  }
  std::uint64_t sum = 0;
  for (const auto& [s, n] : tally) {
    EXPECT_EQ(t.count(s), n);
    sum += n;
  }
  EXPECT_EQ(t.total_insertions(), sum);
  EXPECT_EQ(t.distinct_states(), tally.size());

  std::ostringstream dump;
  t.dump(dump);
  const std::string text = dump.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), tally.size());
}

TEST(GlobalScoreTest, Examples) {
  CountTable t;
  std::vector<Observation> ep;
  for (int i = 0; i < 6; ++i) ep.push_back(ob({static_cast<float>(i)}));
  update_counts(t, ep);
  EXPECT_DOUBLE_EQ(global_score(t, ep), 1.0);
  for (int k = 0; k < 3; ++k) update_counts(t, ep);
  EXPECT_DOUBLE_EQ(global_score(t, ep), 0.5);

  CountTable empty;
  EXPECT_THROW(global_score(empty, ep), ContractViolation);
}

TEST(GlobalScoreTest, StrictlyDecreasesAsCountsGrow) {
  CountTable t;
  const std::vector<Observation> ep{ob({1}), ob({2}), ob({1})};
  update_counts(t, ep);
  double prev = global_score(t, ep);
  for (int k = 0; k < 10; ++k) {
    update_counts(t, ep);
    const double now = global_score(t, ep);
    EXPECT_LT(now, prev);
    EXPECT_GT(now, 0.0);
    prev = now;
  }
}

TEST(GlobalScoreTest, MatchesDirectSummation) {
  Rng rng(8);
  CountTable t;
  std::map<std::vector<float>, std::uint64_t> tally;
  for (int e = 0; e < 40; ++e) {
    const auto states = random_states(rng, static_cast<int>(rng.uniform_int(1, 40)), 20);
    update_counts(t, states);
    for (const auto& s : states) ++tally[s];
    double oracle = 0.0;
    for (const auto& s : states) oracle += 1.0 / std::sqrt(static_cast<double>(tally[s]));
    oracle /= static_cast<double>(states.size());
    EXPECT_NEAR(global_score(t, states), oracle, 1e-12);
  }
}

TEST(EpisodicScoreTest, Examples) {
  const ScoreWeights d;
  EXPECT_EQ(episodic_score(0, 0, 0, d), 0.0);
  EXPECT_NEAR(episodic_score(1.0, 0.8, 0.5, d), 1.0805, 1e-15);
  const ScoreWeights no_local{1.0, 0.0, 0.001};
  EXPECT_EQ(episodic_score(0.3, 0.1, 0.7, no_local), episodic_score(0.3, 0.9, 0.7, no_local));
}

TEST(EpisodicScoreTest, LinearInEachArgument) {
  Rng rng(2);
  const ScoreWeights w{rng.uniform(), rng.uniform(), rng.uniform()};
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(), c = rng.uniform(), k = rng.uniform(-3, 3);
    const double base = episodic_score(0, b, c, w);
    EXPECT_NEAR(episodic_score(k * a, b, c, w) - base, k * (episodic_score(a, b, c, w) - base), 1e-12);
  }
}

TEST(ScoringPropertyTest, PermutationInvariance) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto states = random_states(rng, 25, 8);
    CountTable t;
    update_counts(t, states);
    const double l = local_score_discrete(states);
    const double g = global_score(t, states);
    std::vector<Observation> cont;
    for (int i = 0; i < 25; ++i) cont.push_back(ob({static_cast<float>(rng.normal()), static_cast<float>(rng.uniform())}));
    const double c = local_score_continuous(cont);
    rng.shuffle(states.begin(), states.end());
    rng.shuffle(cont.begin(), cont.end());
    EXPECT_EQ(local_score_discrete(states), l);
    EXPECT_DOUBLE_EQ(global_score(t, states), g);
    EXPECT_NEAR(local_score_continuous(cont), c, 1e-12);
  }
}

TEST(ScoringPropertyTest, LocalScoreRangeAndUniqueness) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto states = random_states(rng, static_cast<int>(rng.uniform_int(1, 20)), 30);
    const double l = local_score_discrete(states);
    EXPECT_GT(l, 0.0);
    EXPECT_LE(l, 1.0);
    std::set<std::vector<float>> uniq(states.begin(), states.end());
    EXPECT_EQ(l == 1.0, uniq.size() == states.size());
  }
}

TEST(ScoringPropertyTest, EqualContentHashesEqual) {
  const Observation a{1.0f, 2.0f, 3.0f};
  const Observation b{1.0f, 2.0f, 3.0f};
  EXPECT_EQ(hash_observation(a), hash_observation(b));
  CountTable t;
  t.add(a);
  EXPECT_EQ(t.count(b), 1u);
}
