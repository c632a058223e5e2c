#include "rapid/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "rapid/errors.hpp"

namespace rapid::nn {

Mlp Mlp::zeros(std::span<const int> sizes) {
  if (sizes.size() < 2) throw InvalidInput("Mlp needs at least input and output sizes");
  Mlp net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.weights.push_back(Matrix::Zero(sizes[l + 1], sizes[l]));
    net.biases.push_back(Matrix::Zero(sizes[l + 1], 1));
  }
  return net;
}

Matrix forward(const Mlp& net, const Matrix& input, MlpCache* cache) {
  if (input.rows() != net.input_dim())
    throw InvalidInput("forward: input has " + std::to_string(input.rows()) + " rows, network expects " +
                       std::to_string(net.input_dim()));
  if (!input.allFinite()) throw InvalidInput("forward: non-finite input");

  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(input);
  }
  Matrix a = input;
  const std::size_t n = net.num_layers();
  for (std::size_t l = 0; l < n; ++l) {
    Matrix z = net.weights[l] * a;
    z.colwise() += net.biases[l].col(0);
    if (l + 1 < n) z = z.array().tanh().matrix();
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

void backward(const Mlp& net, const MlpCache& cache, const Matrix& d_output, Mlp& grads) {
  const std::size_t n = net.num_layers();
  Matrix dz = d_output;
  for (std::size_t l = n; l-- > 0;) {
    const Matrix& a_prev = cache.activations[l];
    grads.weights[l].noalias() += dz * a_prev.transpose();
    grads.biases[l].col(0) += dz.rowwise().sum();
    if (l == 0) break;
    Matrix da = net.weights[l].transpose() * dz;
    dz = (da.array() * (1.0 - a_prev.array().square())).matrix();
  }
}

// ---------------------------------------------------------------------------

void orthogonal_init(Matrix& w, double gain, Rng& rng) {
  const auto rows = w.rows();
  const auto cols = w.cols();
  const bool tall = rows >= cols;
  Matrix a(tall ? rows : cols, tall ? cols : rows);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix r = qr.matrixQR().topLeftCorner(a.cols(), a.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  w = gain * (tall ? q : Matrix(q.transpose()));
}

ActorCritic ActorCritic::create(int obs_dim, ActionSpace actions, std::span<const int> hidden, Rng& rng) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  std::vector<int> policy_sizes = sizes;
  policy_sizes.push_back(actions.size);
  std::vector<int> value_sizes = sizes;
  value_sizes.push_back(1);

  ActorCritic ac;
  ac.continuous = actions.continuous;
  ac.policy = Mlp::zeros(policy_sizes);
  ac.value = Mlp::zeros(value_sizes);
  const double hidden_gain = std::sqrt(2.0);
  for (std::size_t l = 0; l < ac.policy.num_layers(); ++l) {
    const bool head = l + 1 == ac.policy.num_layers();
    orthogonal_init(ac.policy.weights[l], head ? 0.01 : hidden_gain, rng);
  }
  for (std::size_t l = 0; l < ac.value.num_layers(); ++l) {
    const bool head = l + 1 == ac.value.num_layers();
    orthogonal_init(ac.value.weights[l], head ? 1.0 : hidden_gain, rng);
  }
  if (ac.continuous) ac.log_std = Matrix::Zero(actions.size, 1);
  return ac;
}

ActorCritic ActorCritic::zeros_like() const {
  ActorCritic z = *this;
  z.set_zero();
  return z;
}

void ActorCritic::set_zero() {
  for (auto& p : parameters()) p.value->setZero();
}

namespace {

template <typename Ref, typename Net>
void append_mlp(std::vector<Ref>& out, const std::string& prefix, Net& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out.push_back({prefix + ".w" + std::to_string(l), &net.weights[l]});
    out.push_back({prefix + ".b" + std::to_string(l), &net.biases[l]});
  }
}

}  // namespace

std::vector<ParamRef> ActorCritic::policy_parameters() {
  std::vector<ParamRef> out;
  append_mlp(out, "policy", policy);
  if (continuous) out.push_back({"log_std", &log_std});
  return out;
}

std::vector<ConstParamRef> ActorCritic::policy_parameters() const {
  std::vector<ConstParamRef> out;
  append_mlp(out, "policy", policy);
  if (continuous) out.push_back({"log_std", &log_std});
  return out;
}

std::vector<ParamRef> ActorCritic::parameters() {
  auto out = policy_parameters();
  append_mlp(out, "value", value);
  return out;
}

std::vector<ConstParamRef> ActorCritic::parameters() const {
  auto out = policy_parameters();
  append_mlp(out, "value", value);
  return out;
}

void check_finite(std::span<const ConstParamRef> tensors, const std::string& what) {
  for (const auto& t : tensors) {
    if (!t.value->allFinite()) throw NumericalError(what + ": non-finite values in " + t.name);
  }
}

void check_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError(what + ": non-finite values");
}

double global_norm(std::span<const ConstParamRef> tensors) {
  double sq = 0.0;
  for (const auto& t : tensors) sq += t.value->squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(std::span<const ParamRef> tensors, double max_norm) {
  double sq = 0.0;
  for (const auto& t : tensors) sq += t.value->squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& t : tensors) *t.value *= scale;
  }
  return norm;
}

// ---------------------------------------------------------------------------

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

double categorical_log_prob(const Vector& logits, int action) {
  if (action < 0 || action >= logits.size())
    throw InvalidInput("categorical_log_prob: action " + std::to_string(action) + " out of range");
  return log_softmax(logits)(action);
}

double categorical_entropy(const Vector& logits) {
  const Vector lp = log_softmax(logits);
  return -(lp.array().exp() * lp.array()).sum();
}

int categorical_sample(const Vector& logits, Rng& rng) {
  const Vector lp = log_softmax(logits);
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < lp.size(); ++k) {
    acc += std::exp(lp(k));
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(lp.size() - 1);
}

int categorical_mode(const Vector& logits) {
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

double clamp_log_std(double v) { return std::clamp(v, kLogStdMin, kLogStdMax); }

double gaussian_log_prob(const Vector& mean, const Matrix& log_std, std::span<const double> action) {
  if (static_cast<Eigen::Index>(action.size()) != mean.size())
    throw InvalidInput("gaussian_log_prob: action dimension mismatch");
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double lp = 0.0;
  for (Eigen::Index d = 0; d < mean.size(); ++d) {
    const double ls = clamp_log_std(log_std(d, 0));
    const double z = (action[static_cast<std::size_t>(d)] - mean(d)) * std::exp(-ls);
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const Matrix& log_std) {
  constexpr double kHalfLog2PiE = 1.41893853320467274178;
  double h = 0.0;
  for (Eigen::Index d = 0; d < log_std.rows(); ++d) h += clamp_log_std(log_std(d, 0)) + kHalfLog2PiE;
  return h;
}

std::vector<double> gaussian_sample(const Vector& mean, const Matrix& log_std, Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(mean.size()));
  for (Eigen::Index d = 0; d < mean.size(); ++d)
    a[static_cast<std::size_t>(d)] = mean(d) + std::exp(clamp_log_std(log_std(d, 0))) * rng.normal();
  return a;
}

// ---------------------------------------------------------------------------

void Adam::step(std::span<const ParamRef> params, std::span<const ConstParamRef> grads) {
  if (params.size() != grads.size()) throw InvalidInput("Adam::step: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (m_.size() != params.size()) throw InvalidInput("Adam::step: parameter set changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = *grads[i].value;
    Matrix& p = *params[i].value;
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw InvalidInput("Adam::step: shape mismatch for " + params[i].name);
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseAbs2();
    p.array() -= lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

void Adam::restore(std::int64_t t, std::vector<Matrix> m, std::vector<Matrix> v) {
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'A', 'P', 'I', 'D', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInput("checkpoint: unexpected end of file");
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_matrix(std::istream& in) {
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28)) throw InvalidInput("checkpoint: tensor too large");
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw InvalidInput("checkpoint: unexpected end of file");
  return m;
}

void put_mlp(std::ostream& out, const Mlp& net) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.num_layers()));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    put_matrix(out, net.weights[l]);
    put_matrix(out, net.biases[l]);
  }
}

Mlp get_mlp(std::istream& in) {
  Mlp net;
  const auto n = get<std::uint32_t>(in);
  if (n == 0 || n > 64) throw InvalidInput("checkpoint: bad layer count");
  for (std::uint32_t l = 0; l < n; ++l) {
    net.weights.push_back(get_matrix(in));
    net.biases.push_back(get_matrix(in));
  }
  return net;
}

void put_adam(std::ostream& out, const Adam& opt) {
  put<double>(out, opt.lr());
  put<double>(out, opt.beta1());
  put<double>(out, opt.beta2());
  put<double>(out, opt.eps());
  put<std::int64_t>(out, opt.step_count());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(opt.first_moments().size()));
  for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
    put_matrix(out, opt.first_moments()[i]);
    put_matrix(out, opt.second_moments()[i]);
  }
}

Adam get_adam(std::istream& in) {
  const double lr = get<double>(in);
  const double b1 = get<double>(in);
  const double b2 = get<double>(in);
  const double eps = get<double>(in);
  const auto t = get<std::int64_t>(in);
  const auto n = get<std::uint32_t>(in);
  std::vector<Matrix> m, v;
  for (std::uint32_t i = 0; i < n; ++i) {
    m.push_back(get_matrix(in));
    v.push_back(get_matrix(in));
  }
  Adam opt(lr, b1, b2, eps);
  opt.restore(t, std::move(m), std::move(v));
  return opt;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, ckpt.params.continuous ? 1 : 0);
  put_mlp(out, ckpt.params.policy);
  put_mlp(out, ckpt.params.value);
  put_matrix(out, ckpt.params.log_std);
  put_adam(out, ckpt.rl_optimizer);
  put_adam(out, ckpt.bc_optimizer);
  if (!out) throw InvalidInput("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidInput("not a checkpoint file: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw InvalidInput("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.params.continuous = get<std::uint8_t>(in) != 0;
  ckpt.params.policy = get_mlp(in);
  ckpt.params.value = get_mlp(in);
  ckpt.params.log_std = get_matrix(in);
  ckpt.rl_optimizer = get_adam(in);
  ckpt.bc_optimizer = get_adam(in);
  return ckpt;
}

}  // namespace rapid::nn
