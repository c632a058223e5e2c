#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "rapid/agent.hpp"
#include "rapid/environments.hpp"
#include "rapid/errors.hpp"
#include "test_util.hpp"

using namespace rapid;

namespace {

AgentConfig chain_config(Mode mode, int nstep = 64) {
  AgentConfig cfg;
  cfg.rapid.mode = mode;
  cfg.ppo.nstep = nstep;
  cfg.rapid.bc_batch = 32;
  cfg.hidden = {16, 16};
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TEST(ModeTest, NamesRoundTrip) {
  for (auto m : {Mode::kFull, Mode::kNoLocal, Mode::kNoGlobal, Mode::kNoExt, Mode::kNoBuffer, Mode::kNoRanking,
                 Mode::kPureExploration, Mode::kBcOnly, Mode::kPpo, Mode::kCount})
    EXPECT_EQ(parse_mode(to_string(m)), m);
  try {
    parse_mode("no_locals");
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("no_local, no_global"), std::string::npos) << e.what();
  }
}

TEST(ModeTest, EffectiveWeights) {
  RapidConfig cfg;
  auto w = [&](Mode m, bool discrete = true) {
    cfg.mode = m;
    return effective_weights(cfg, discrete);
  };
  EXPECT_EQ(w(Mode::kFull).w0, 1.0);
  EXPECT_EQ(w(Mode::kFull).w1, 0.1);
  EXPECT_EQ(w(Mode::kFull).w2, 0.001);
  EXPECT_EQ(w(Mode::kNoLocal).w1, 0.0);
  EXPECT_EQ(w(Mode::kNoGlobal).w2, 0.0);
  EXPECT_EQ(w(Mode::kNoExt).w0, 0.0);
  EXPECT_EQ(w(Mode::kPureExploration).w0, 0.0);
  EXPECT_EQ(w(Mode::kPureExploration).w1, 0.1);
  EXPECT_EQ(w(Mode::kFull, false).w2, 0.0);
  EXPECT_EQ(w(Mode::kFull, false).w1, 0.1);
}

TEST(AnnealTest, Examples) {
  EXPECT_EQ(anneal_factor(0, 100), 1.0);
  EXPECT_EQ(anneal_factor(50, 100), 0.5);
  EXPECT_EQ(anneal_factor(100, 100), 0.0);
  EXPECT_EQ(anneal_factor(150, 100), 0.0);
  EXPECT_THROW(anneal_factor(1, 0), InvalidInput);
  EXPECT_EQ(annealed_steps(5, 1.0), 5);
  EXPECT_EQ(annealed_steps(5, 0.3), 2);
  EXPECT_EQ(annealed_steps(5, 0.0), 0);
}

TEST(CountBonusTest, Examples) {
  CountTable t;
  const Observation o{1.0f, 2.0f};
  EXPECT_THROW(count_bonus_wrap(0.0, o, t, 0.005), ContractViolation);
  t.add(o);
  EXPECT_DOUBLE_EQ(count_bonus_wrap(0.0, o, t, 0.005), 0.005);
  for (int i = 0; i < 3; ++i) t.add(o);
  EXPECT_DOUBLE_EQ(count_bonus_wrap(0.0, o, t, 0.005), 0.0025);
  EXPECT_DOUBLE_EQ(count_bonus_wrap(1.0, o, t, 0.005), 1.0025);
}

TEST(CountBonusTest, HandSummedTrace) {
  // Walking 0 -> 1 -> 0 -> 1 on a chain counts each visited cell.
  CountTable t;
  ChainEnv env(parse_env_name("Chain-8"));
  Observation o = env.reset(0);
  t.add(o);
  double total = 0.0;
  for (int a : {1, 0, 1}) {
    const auto r = env.step(Action{a, {}});
    t.add(r.obs);
    total += count_bonus_wrap(r.reward, r.obs, t, 0.005);
  }
  EXPECT_NEAR(total, 0.005 / 1 + 0.005 / std::sqrt(2.0) + 0.005 / std::sqrt(2.0), 1e-15);
}

TEST(ConfigTest, Validation) {
  AgentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rapid.buffer_size = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = AgentConfig{};
  cfg.hidden = {};
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = AgentConfig{};
  cfg.rapid.anneal = true;
  EXPECT_THROW(Trainer(parse_env_name("Chain-8"), cfg, 1), InvalidInput);
}

TEST(TrainerTest, EpisodeRecordsAreConsistent) {
  Trainer tr(parse_env_name("MultiRoom-N2-S4"), chain_config(Mode::kFull, 128), 3);
  const ScoreWeights w = tr.weights();
  int episodes = 0;
  std::size_t pairs = 0;
  while (episodes < 5) {
    const auto m = tr.iterate();
    EXPECT_EQ(m.frames, tr.frames());
    for (const auto& e : m.episodes) {
      ++episodes;
      pairs += e.length;
      EXPECT_NEAR(e.score.s_local, static_cast<double>(e.distinct_obs) / static_cast<double>(e.length), 1e-15);
      EXPECT_EQ(e.score.s_ext, e.extrinsic_return);
      EXPECT_GT(e.score.s_global, 0.0);
      EXPECT_LE(e.score.s_global, 1.0);
      EXPECT_NEAR(e.score.s_total, w.w0 * e.score.s_ext + w.w1 * e.score.s_local + w.w2 * e.score.s_global, 1e-15);
    }
    // Cloning runs S steps per completed episode.
    EXPECT_EQ(m.bc_steps, 5 * static_cast<int>(m.episodes.size()));
    EXPECT_EQ(std::isnan(m.bc_loss), m.bc_steps == 0);
  }
  EXPECT_EQ(tr.buffer().size(), pairs);
  EXPECT_EQ(tr.counts().total_insertions(), pairs);
}

TEST(TrainerTest, NoLocalScoresIgnoreLocalTerm) {
  Trainer tr(parse_env_name("Chain-8"), chain_config(Mode::kNoLocal), 4);
  for (int i = 0; i < 3; ++i)
    for (const auto& e : tr.iterate().episodes)
      EXPECT_DOUBLE_EQ(e.score.s_total, e.score.s_ext + 0.001 * e.score.s_global);
}

TEST(TrainerTest, PureExplorationHidesEnvironmentReward) {
  auto cfg = chain_config(Mode::kPureExploration);
  Trainer tr(parse_env_name("Chain-8"), cfg, 5);
  int episodes = 0;
  for (int i = 0; i < 10; ++i) {
    const auto m = tr.iterate();
    EXPECT_EQ(m.ppo_env_reward, 0.0);
    EXPECT_EQ(m.ranking_ext_term, 0.0);
    episodes += static_cast<int>(m.episodes.size());
  }
  EXPECT_GT(episodes, 0);
  // The full agent does see environment reward. Chain reward arrives only on
  // the final step, so it matches the completed episodes' returns.
  Trainer full(parse_env_name("Chain-4"), chain_config(Mode::kFull), 5);
  double seen = 0.0, returns = 0.0, ranked = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto m = full.iterate();
    seen += m.ppo_env_reward;
    ranked += m.ranking_ext_term;
    for (const auto& e : m.episodes) returns += e.extrinsic_return;
  }
  EXPECT_GT(seen, 0.0);
  EXPECT_NEAR(seen, returns, 1e-12);
  EXPECT_NEAR(ranked, returns, 1e-12);
}

TEST(TrainerTest, BaselinesKeepNoBuffer) {
  for (Mode mode : {Mode::kNoBuffer, Mode::kPpo, Mode::kCount}) {
    Trainer tr(parse_env_name("Chain-8"), chain_config(mode), 6);
    for (int i = 0; i < 3; ++i) {
      const auto m = tr.iterate();
      EXPECT_EQ(m.bc_steps, 0);
      EXPECT_TRUE(std::isnan(m.bc_loss));
    }
    EXPECT_TRUE(tr.buffer().empty()) << to_string(mode);
  }
}

TEST(TrainerTest, CountModeCountsEveryVisitedObservation) {
  Trainer tr(parse_env_name("Chain-8"), chain_config(Mode::kCount), 7);
  std::size_t episodes = 0;
  for (int i = 0; i < 3; ++i) episodes += tr.iterate().episodes.size();
  // Initial reset, every step, and the reset after each finished episode.
  EXPECT_EQ(tr.counts().total_insertions(), 1 + 3 * 64 + episodes);
}

TEST(TrainerTest, NoRankingUsesFifoBuffer) {
  auto cfg = chain_config(Mode::kNoRanking);
  cfg.rapid.buffer_size = 20;
  Trainer tr(parse_env_name("Chain-8"), cfg, 8);
  for (int i = 0; i < 5; ++i) tr.iterate();
  ASSERT_EQ(tr.buffer().size(), 20u);
  // FIFO keeps the newest pairs, so the sequence numbers are contiguous.
  std::set<std::uint64_t> seqs;
  for (const auto& p : tr.buffer().pairs()) seqs.insert(p.seq);
  EXPECT_EQ(*seqs.rbegin() - *seqs.begin(), 19u);
}

TEST(TrainerTest, AnnealingStopsCloning) {
  auto cfg = chain_config(Mode::kFull);
  cfg.rapid.anneal = true;
  Trainer tr(parse_env_name("Chain-8"), cfg, 9, 128);
  tr.iterate();
  tr.iterate();  // frames = 128 = horizon
  for (int i = 0; i < 3; ++i) EXPECT_EQ(tr.iterate().bc_steps, 0);
}

TEST(TrainerTest, BcOnlyChangesPolicyOnlyThroughCloning) {
  auto cfg = chain_config(Mode::kBcOnly);
  cfg.rapid.bc_steps = 0;
  Trainer tr(parse_env_name("Chain-8"), cfg, 10);
  const auto before = tr.params();
  for (int i = 0; i < 3; ++i) tr.iterate();
  for (std::size_t l = 0; l < before.policy.num_layers(); ++l)
    EXPECT_EQ(tr.params().policy.weights[l], before.policy.weights[l]);
  EXPECT_NE(tr.params().value.weights.back(), before.value.weights.back());
}

TEST(TrainerTest, PointMassUsesContinuousScores) {
  auto cfg = chain_config(Mode::kFull);
  Trainer tr(parse_env_name("PointMass"), cfg, 11);
  EXPECT_EQ(tr.weights().w2, 0.0);
  int seen = 0;
  for (int i = 0; i < 4; ++i) {
    for (const auto& e : tr.iterate().episodes) {
      ++seen;
      EXPECT_EQ(e.score.s_global, 0.0);
      EXPECT_GE(e.score.s_local, 0.0);
    }
  }
  EXPECT_GT(seen, 0);
  EXPECT_GT(tr.buffer().size(), 0u);
}

TEST(TrainerTest, SameSeedIsBitIdentical) {
  auto run = [](std::uint64_t seed) {
    Trainer tr(parse_env_name("Chain-8"), chain_config(Mode::kFull), seed);
    std::vector<double> trace;
    for (int i = 0; i < 4; ++i) {
      const auto m = tr.iterate();
      trace.push_back(m.ppo.loss);
      trace.push_back(m.bc_loss);
      for (const auto& e : m.episodes) trace.push_back(e.score.s_total);
    }
    return std::pair{trace, tr.params()};
  };
  const auto [ta, pa] = run(1);
  const auto [tb, pb] = run(1);
  const auto [tc, pc] = run(2);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (std::isnan(ta[i])) {
      EXPECT_TRUE(std::isnan(tb[i]));
    } else {
      EXPECT_EQ(ta[i], tb[i]);
    }
  }
  EXPECT_EQ(pa.policy.weights[0], pb.policy.weights[0]);
  EXPECT_NE(pa.policy.weights[0], pc.policy.weights[0]);
}

TEST(TrainerTest, GoldenChainTrace) {
  Trainer tr(parse_env_name("Chain-8"), chain_config(Mode::kFull, 32), 2024);
  std::ostringstream out;
  for (int i = 0; i < 2; ++i) {
    const auto m = tr.iterate();
    out << "iteration " << m.iteration << " frames " << m.frames << " ppo_loss " << fmt(m.ppo.loss) << " bc_loss "
        << fmt(m.bc_loss) << " bc_steps " << m.bc_steps << " buffer " << m.buffer.len << " " << fmt(m.buffer.min_score)
        << "\n";
    for (const auto& e : m.episodes)
      out << "  episode len " << e.length << " end " << e.end_frame << " ext " << fmt(e.score.s_ext) << " local "
          << fmt(e.score.s_local) << " global " << fmt(e.score.s_global) << " total " << fmt(e.score.s_total) << "\n";
  }
  test_util::check_golden("chain_trace.txt", out.str());
}

TEST(EvaluateTest, DeterministicAndDimensionChecked) {
  Trainer tr(parse_env_name("Chain-8"), chain_config(Mode::kFull), 12);
  const auto a = evaluate_policy(tr.params(), parse_env_name("Chain-8"), 5, 3, false);
  const auto b = evaluate_policy(tr.params(), parse_env_name("Chain-8"), 5, 3, false);
  EXPECT_EQ(a.mean_return, b.mean_return);
  EXPECT_EQ(a.mean_length, b.mean_length);
  EXPECT_EQ(a.episodes, 5);
  EXPECT_THROW(evaluate_policy(tr.params(), parse_env_name("Chain-12"), 1, 0), InvalidInput);
  EXPECT_THROW(evaluate_policy(tr.params(), parse_env_name("MultiRoom-N2-S4"), 1, 0), InvalidInput);
}
