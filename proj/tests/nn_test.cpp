#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fd_check.hpp"
#include "rapid/errors.hpp"
#include "rapid/nn.hpp"
#include "test_util.hpp"

using namespace rapid;
using nn::Matrix;
using nn::Vector;

namespace {

nn::ActorCritic small_net(Rng& rng, bool continuous = false, int obs = 4, int act = 3, int hidden = 8) {
  const std::vector<int> h{hidden, hidden};
  auto ac = nn::ActorCritic::create(obs, ActionSpace{continuous, act}, h, rng);
  for (auto p : ac.parameters())
    for (Eigen::Index i = 0; i < p.value->size(); ++i) p.value->data()[i] += rng.uniform(-0.5, 0.5);
  return ac;
}

Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST(ForwardTest, ZeroParamsGiveZeroOutputs) {
  const std::vector<int> sizes{5, 64, 64, 7};
  const nn::Mlp net = nn::Mlp::zeros(sizes);
  Rng rng(1);
  const Matrix out = nn::forward(net, random_matrix(rng, 5, 3));
  EXPECT_EQ(out.rows(), 7);
  EXPECT_EQ(out.cols(), 3);
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ForwardTest, MatchesIndependentArithmetic) {
  Rng rng(3);
  const auto ac = small_net(rng);
  const Matrix x = random_matrix(rng, 4, 2);
  const Matrix out = nn::forward(ac.policy, x);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> a(x.col(j).data(), x.col(j).data() + 4);
    for (std::size_t l = 0; l < ac.policy.num_layers(); ++l) {
      const Matrix& w = ac.policy.weights[l];
      std::vector<double> next(static_cast<std::size_t>(w.rows()));
      for (int r = 0; r < w.rows(); ++r) {
        double s = ac.policy.biases[l](r, 0);
        for (int c = 0; c < w.cols(); ++c) s += w(r, c) * a[static_cast<std::size_t>(c)];
        next[static_cast<std::size_t>(r)] = l + 1 < ac.policy.num_layers() ? std::tanh(s) : s;
      }
      a = next;
    }
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(out(k, j), a[static_cast<std::size_t>(k)], 1e-14);
  }
}

TEST(ForwardTest, RejectsBadInput) {
  Rng rng(0);
  const auto ac = small_net(rng);
  EXPECT_THROW(nn::forward(ac.policy, Matrix::Zero(5, 1)), InvalidInput);
  Matrix x = Matrix::Zero(4, 1);
  x(2, 0) = std::nan("");
  EXPECT_THROW(nn::forward(ac.policy, x), InvalidInput);
}

TEST(DistributionTest, LogProbExamples) {
  EXPECT_NEAR(nn::categorical_log_prob(Vector::Zero(2), 0), -std::log(2.0), 1e-15);
  EXPECT_NEAR(nn::categorical_log_prob(Vector::Zero(2), 1), -std::log(2.0), 1e-15);
  EXPECT_THROW(nn::categorical_log_prob(Vector::Zero(2), 2), InvalidInput);
  const std::vector<double> a{0.0};
  EXPECT_NEAR(nn::gaussian_log_prob(Vector::Zero(1), Matrix::Zero(1, 1), a), -0.5 * std::log(2 * M_PI), 1e-15);
}

TEST(DistributionTest, UniformEntropyIsLogK) {
  for (int k : {2, 3, 7}) EXPECT_NEAR(nn::categorical_entropy(Vector::Zero(k)), std::log(k), 1e-14);
  EXPECT_NEAR(nn::gaussian_entropy(Matrix::Zero(2, 1)), std::log(2 * M_PI * M_E), 1e-14);
}

TEST(DistributionTest, SoftmaxNormalized) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    Vector logits(7);
    for (int k = 0; k < 7; ++k) logits(k) = rng.uniform(-30, 30);
    EXPECT_NEAR(nn::log_softmax(logits).array().exp().sum(), 1.0, 1e-12);
  }
}

TEST(DistributionTest, LogStdIsClamped) {
  Matrix ls(2, 1);
  ls << -50.0, 9.0;
  EXPECT_NEAR(nn::gaussian_entropy(ls), (-20.0 + 2.0) + 2 * 0.5 * std::log(2 * M_PI * M_E), 1e-12);
}

TEST(DistributionTest, SampleFrequenciesMatchSoftmax) {
  Vector logits(4);
  logits << 0.5, -1.0, 2.0, 0.0;
  const Vector p = nn::log_softmax(logits).array().exp();
  Rng rng(77);
  const int n = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(nn::categorical_sample(logits, rng))];
  for (int k = 0; k < 4; ++k) {
    const double sigma = std::sqrt(n * p(k) * (1 - p(k)));
    EXPECT_LT(std::abs(counts[static_cast<std::size_t>(k)] - n * p(k)), 3 * sigma) << "action " << k;
  }
}

TEST(DistributionTest, GaussianSampleMoments) {
  Vector mean(1);
  mean << 0.3;
  Matrix ls(1, 1);
  ls << std::log(0.5);
  Rng rng(8);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double a = nn::gaussian_sample(mean, ls, rng)[0];
    s += a;
    s2 += a * a;
  }
  const double m = s / n;
  EXPECT_NEAR(m, 0.3, 3 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(s2 / n - m * m), 0.5, 0.01);
}

TEST(BackwardTest, ValueLossAtZeroParamsOnlyTouchesHeadBias) {
  const std::vector<int> sizes{4, 64, 64, 1};
  const nn::Mlp net = nn::Mlp::zeros(sizes);
  nn::Mlp grads = nn::Mlp::zeros(sizes);
  Rng rng(2);
  const Matrix x = random_matrix(rng, 4, 5);
  nn::MlpCache cache;
  const Matrix v = nn::forward(net, x, &cache);
  // loss = 0.5 * sum (v - 1)^2
  nn::backward(net, cache, v.array() - 1.0, grads);
  for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(grads.weights[l].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grads.biases[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grads.biases[1].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(grads.biases[2](0, 0), -5.0);
}

TEST(BackwardTest, MatchesFiniteDifferences) {
  Rng rng(11);
  for (int inst = 0; inst < 5; ++inst) {
    const auto ac = small_net(rng);
    const Matrix x = random_matrix(rng, 4, 6);
    const Matrix c = random_matrix(rng, 3, 6);
    const Matrix target = random_matrix(rng, 1, 6);
    auto loss = [&](const nn::ActorCritic& p) {
      const Matrix out = nn::forward(p.policy, x);
      const Matrix v = nn::forward(p.value, x);
      return (c.array() * out.array()).sum() + 0.5 * (v - target).squaredNorm();
    };
    nn::ActorCritic g = ac.zeros_like();
    nn::MlpCache pc, vc;
    nn::forward(ac.policy, x, &pc);
    const Matrix v = nn::forward(ac.value, x, &vc);
    nn::backward(ac.policy, pc, c, g.policy);
    nn::backward(ac.value, vc, v - target, g.value);
    const auto rep = test_fd::check_gradients(ac, g, loss);
    EXPECT_LE(rep.max_rel_err, 1e-4) << rep.worst;
    EXPECT_EQ(rep.checked, static_cast<int>(2 * (4 * 8 + 8 + 8 * 8 + 8) + 8 * 3 + 3 + 8 + 1));
  }
}

TEST(BackwardTest, CheckFiniteNamesTensor) {
  Rng rng(1);
  auto ac = small_net(rng);
  ac.value.weights[1](0, 0) = std::numeric_limits<double>::infinity();
  try {
    nn::check_finite(std::as_const(ac).parameters(), "grad");
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("value"), std::string::npos) << e.what();
  }
}

TEST(InitTest, OrthogonalWithGain) {
  Rng rng(4);
  for (auto [rows, cols] : {std::pair{64, 147}, std::pair{64, 64}, std::pair{147, 64}, std::pair{7, 64}}) {
    for (double gain : {std::sqrt(2.0), 0.01, 1.0}) {
      Matrix w(rows, cols);
      nn::orthogonal_init(w, gain, rng);
      const Matrix gram = rows >= cols ? Matrix(w.transpose() * w) : Matrix(w * w.transpose());
      const Matrix expected = gain * gain * Matrix::Identity(gram.rows(), gram.cols());
      EXPECT_LT((gram - expected).cwiseAbs().maxCoeff(), 1e-6) << rows << "x" << cols << " gain " << gain;
    }
  }
}

TEST(InitTest, ActorCriticShapesAndBiases) {
  Rng rng(9);
  const std::vector<int> h{64, 64};
  const auto ac = nn::ActorCritic::create(147, ActionSpace{false, 7}, h, rng);
  EXPECT_EQ(ac.obs_dim(), 147);
  EXPECT_EQ(ac.action_dim(), 7);
  EXPECT_EQ(ac.value.output_dim(), 1);
  for (const auto& b : ac.policy.biases) EXPECT_EQ(b.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(ac.log_std.size(), 0);
  const auto cont = nn::ActorCritic::create(4, ActionSpace{true, 2}, h, rng);
  EXPECT_EQ(cont.log_std.rows(), 2);
  EXPECT_EQ(cont.log_std.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdamTest, ScalarTraceMatchesHandComputation) {
  Matrix p(1, 1);
  p << 0.5;
  Matrix g(1, 1);
  g << 1.0;
  nn::Adam opt(1e-3);
  std::vector<nn::ParamRef> params{{"p", &p}};
  std::vector<nn::ConstParamRef> grads{{"p", &g}};
  long double x = 0.5L, m = 0, v = 0;
  for (int t = 1; t <= 50; ++t) {
    opt.step(params, grads);
    m = 0.9L * m + 0.1L;
    v = 0.999L * v + 0.001L;
    const long double mhat = m / (1 - std::pow(0.9L, t));
    const long double vhat = v / (1 - std::pow(0.999L, t));
    x -= 1e-3L * mhat / (std::sqrt(vhat) + 1e-8L);
    EXPECT_NEAR(p(0, 0), static_cast<double>(x), 1e-12) << "step " << t;
  }
  EXPECT_EQ(opt.step_count(), 50);
}

TEST(AdamTest, ZeroGradientLeavesParams) {
  Rng rng(6);
  auto ac = small_net(rng);
  const auto before = ac;
  const auto zero = ac.zeros_like();
  nn::Adam opt(1e-2);
  for (int i = 0; i < 3; ++i) opt.step(ac.parameters(), zero.parameters());
  for (std::size_t l = 0; l < ac.policy.num_layers(); ++l) EXPECT_EQ(ac.policy.weights[l], before.policy.weights[l]);
}

TEST(AdamTest, IdenticalRunsAreBitIdentical) {
  auto run = [] {
    Rng rng(21);
    auto ac = small_net(rng);
    nn::Adam opt(1e-3);
    for (int i = 0; i < 10; ++i) {
      auto g = ac.zeros_like();
      for (auto r : g.parameters())
        for (Eigen::Index k = 0; k < r.value->size(); ++k) r.value->data()[k] = rng.normal();
      opt.step(ac.parameters(), std::as_const(g).parameters());
    }
    return ac;
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t l = 0; l < a.policy.num_layers(); ++l) {
    EXPECT_EQ(a.policy.weights[l], b.policy.weights[l]);
    EXPECT_EQ(a.value.weights[l], b.value.weights[l]);
  }
}

TEST(ClipTest, GlobalNormClipping) {
  Matrix a(1, 2), b(2, 1);
  a << 3.0, 0.0;
  b << 0.0, 4.0;
  std::vector<nn::ParamRef> refs{{"a", &a}, {"b", &b}};
  EXPECT_DOUBLE_EQ(nn::clip_global_norm(refs, 1.0), 5.0);
  EXPECT_NEAR(a(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(b(1, 0), 0.8, 1e-15);
  EXPECT_NEAR(nn::clip_global_norm(refs, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(a(0, 0), 0.6, 1e-15);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  test_util::TempDir dir("ckpt");
  Rng rng(13);
  for (bool continuous : {false, true}) {
    auto ac = small_net(rng, continuous, 5, 2, 16);
    nn::Adam rl(3e-4), bc(1e-4);
    auto g = ac.zeros_like();
    for (auto r : g.parameters())
      for (Eigen::Index k = 0; k < r.value->size(); ++k) r.value->data()[k] = rng.normal();
    rl.step(ac.parameters(), std::as_const(g).parameters());
    bc.step(ac.policy_parameters(), std::as_const(g).policy_parameters());
    const nn::Checkpoint ckpt{ac, rl, bc};
    const auto path = dir.path() / "net.ckpt";
    nn::save_checkpoint(path, ckpt);
    const nn::Checkpoint back = nn::load_checkpoint(path);

    EXPECT_EQ(back.params.continuous, continuous);
    const auto pa = ckpt.params.parameters();
    const auto pb = back.params.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      EXPECT_EQ(pa[i].name, pb[i].name);
      EXPECT_EQ(*pa[i].value, *pb[i].value);
    }
    EXPECT_EQ(back.rl_optimizer.step_count(), 1);
    EXPECT_EQ(back.rl_optimizer.lr(), 3e-4);
    ASSERT_EQ(back.bc_optimizer.first_moments().size(), bc.first_moments().size());
    for (std::size_t i = 0; i < bc.first_moments().size(); ++i) {
      EXPECT_EQ(back.bc_optimizer.first_moments()[i], bc.first_moments()[i]);
      EXPECT_EQ(back.bc_optimizer.second_moments()[i], bc.second_moments()[i]);
    }
  }
}

TEST(CheckpointTest, RejectsGarbage) {
  test_util::TempDir dir("ckpt_bad");
  const auto path = dir.path() / "bad.ckpt";
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(nn::load_checkpoint(path), InvalidInput);
  EXPECT_THROW(nn::load_checkpoint(dir.path() / "missing.ckpt"), InvalidInput);
}
