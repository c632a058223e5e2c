#include "rapid/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rapid/errors.hpp"
#include "rapid/nn.hpp"

namespace rapid {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class YamlReader {
 public:
  explicit YamlReader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const { fail(at.Mark(), msg); }

  [[noreturn]] void fail(const YAML::Mark& mark, const std::string& msg) const {
    std::ostringstream out;
    out << source_;
    if (!mark.is_null()) out << ':' << mark.line + 1 << ':' << mark.column + 1;
    out << ": " << msg;
    throw ConfigError(out.str());
  }

  void require_map(const YAML::Node& node, std::string_view what) const {
    if (!node.IsMap()) fail(node, std::string(what) + " must be a mapping");
  }

  void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                  std::string_view section) const {
    for (auto it = map.begin(); it != map.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        std::string list;
        for (auto a : allowed) {
          if (!list.empty()) list += ", ";
          list += a;
        }
        fail(it->first, "unknown key '" + key + "' in " + std::string(section) + " (allowed: " + list + ")");
      }
    }
  }

  template <typename T>
  bool read(const YAML::Node& map, const char* key, T& out) const {
    const YAML::Node node = map[key];
    if (!node) return false;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, std::string("'") + key + "' has the wrong type (expected " + type_name<T>() + ")");
    }
    return true;
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "true/false";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }

  std::string source_;
};

EnvSpec read_env(const YamlReader& r, const YAML::Node& node) {
  r.require_map(node, "env");
  r.check_keys(node, {"name", "kind", "n_rooms", "room_size", "chain_length", "max_steps", "step_penalty",
                      "layout_seed_stream"},
               "env");
  EnvSpec spec;
  std::string text;
  try {
    if (r.read(node, "name", text)) {
      spec = parse_env_name(text);
    } else if (r.read(node, "kind", text)) {
      spec.kind = parse_env_kind(text);
    } else {
      r.fail(node, "env needs either 'name' or 'kind'");
    }
  } catch (const InvalidInput& e) {
    r.fail(node["name"] ? node["name"] : node["kind"], e.what());
  }
  r.read(node, "n_rooms", spec.n_rooms);
  r.read(node, "room_size", spec.room_size);
  r.read(node, "chain_length", spec.chain_length);
  int max_steps = 0;
  if (r.read(node, "max_steps", max_steps)) spec.max_steps = max_steps;
  double penalty = 0.0;
  if (r.read(node, "step_penalty", penalty)) spec.step_penalty = penalty;
  r.read(node, "layout_seed_stream", spec.layout_seed_stream);
  try {
    spec.validate();
  } catch (const InvalidInput& e) {
    r.fail(node, e.what());
  }
  return spec;
}

void read_agent(const YamlReader& r, const YAML::Node& node, RapidConfig& rapid, std::vector<int>& hidden) {
  r.require_map(node, "agent");
  r.check_keys(node, {"mode", "weights", "buffer_size", "bc_steps", "bc_batch", "anneal", "anneal_horizon",
                      "count_bonus_coeff", "keep_whole_episodes", "hidden"},
               "agent");
  std::string mode;
  if (r.read(node, "mode", mode)) {
    try {
      rapid.mode = parse_mode(mode);
    } catch (const InvalidInput& e) {
      r.fail(node["mode"], e.what());
    }
  }
  if (const YAML::Node w = node["weights"]) {
    r.require_map(w, "agent.weights");
    r.check_keys(w, {"w0", "w1", "w2"}, "agent.weights");
    r.read(w, "w0", rapid.weights.w0);
    r.read(w, "w1", rapid.weights.w1);
    r.read(w, "w2", rapid.weights.w2);
  }
  r.read(node, "buffer_size", rapid.buffer_size);
  r.read(node, "bc_steps", rapid.bc_steps);
  r.read(node, "bc_batch", rapid.bc_batch);
  r.read(node, "anneal", rapid.anneal);
  r.read(node, "anneal_horizon", rapid.anneal_horizon);
  r.read(node, "count_bonus_coeff", rapid.count_bonus_coeff);
  r.read(node, "keep_whole_episodes", rapid.keep_whole_episodes);
  r.read(node, "hidden", hidden);
  try {
    rapid.validate();
  } catch (const InvalidInput& e) {
    r.fail(node, e.what());
  }
}

void read_ppo(const YamlReader& r, const YAML::Node& node, PpoConfig& ppo) {
  r.require_map(node, "ppo");
  r.check_keys(node, {"gamma", "lambda", "clip", "vf_coef", "ent_coef", "lr", "max_grad_norm", "nstep", "epochs",
                      "minibatches"},
               "ppo");
  r.read(node, "gamma", ppo.gamma);
  r.read(node, "lambda", ppo.lambda);
  r.read(node, "clip", ppo.clip);
  r.read(node, "vf_coef", ppo.vf_coef);
  r.read(node, "ent_coef", ppo.ent_coef);
  r.read(node, "lr", ppo.lr);
  r.read(node, "max_grad_norm", ppo.max_grad_norm);
  r.read(node, "nstep", ppo.nstep);
  r.read(node, "epochs", ppo.epochs);
  r.read(node, "minibatches", ppo.minibatches);
  try {
    ppo.validate();
  } catch (const InvalidInput& e) {
    r.fail(node, e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_field(std::string_view s, std::string_view field) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidInput("metrics row: bad value '" + std::string(s) + "' for " + std::string(field));
  return v;
}

template <typename Int>
Int parse_int_field(std::string_view s, std::string_view field) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidInput("bad integer '" + std::string(s) + "' for " + std::string(field));
  return v;
}

double parse_number(std::string_view s, std::string_view field) {
  if (s == "nan" || s == "inf" || s == "-inf") throw InvalidInput(std::string(field) + " must be finite");
  return parse_double_field(s, field);
}

double mean_of(const std::deque<double>& xs) {
  if (xs.empty()) return kNaN;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::mutex log_mutex;

void log_line(const std::string& msg) {
  std::lock_guard lock(log_mutex);
  std::cerr << msg << '\n';
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  agent.validate();
  if (total_frames <= 0) throw InvalidInput("total_frames must be > 0");
  if (seeds.empty()) throw InvalidInput("seeds must not be empty");
  if (eval_every < 0) throw InvalidInput("eval_every must be >= 0");
  if (eval_episodes < 1) throw InvalidInput("eval_episodes must be >= 1");
  if (parallel < 1) throw InvalidInput("parallel must be >= 1");
  if (name.empty() || name.find('/') != std::string::npos) throw InvalidInput("name must be a plain directory name");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  const YamlReader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    r.fail(e.mark, e.msg);
  }
  if (!root.IsMap()) r.fail(root, "top level must be a mapping");
  r.check_keys(root, {"name", "env", "agent", "ppo", "total_frames", "seeds", "eval_every", "eval_episodes",
                      "log_path", "parallel", "stop_at_return"},
               "config");

  ExperimentConfig cfg;
  r.read(root, "name", cfg.name);
  if (!root["env"]) r.fail(root, "missing required section 'env'");
  cfg.env = read_env(r, root["env"]);
  if (cfg.env.kind == EnvKind::kPointMass) cfg.agent.ppo.lr = 5e-4;
  if (root["agent"]) read_agent(r, root["agent"], cfg.agent.rapid, cfg.agent.hidden);
  if (root["ppo"]) read_ppo(r, root["ppo"], cfg.agent.ppo);

  if (!r.read(root, "total_frames", cfg.total_frames)) r.fail(root, "missing required key 'total_frames'");
  if (const YAML::Node seeds = root["seeds"]) {
    if (seeds.IsScalar()) {
      cfg.seeds.push_back(0);
      r.read(root, "seeds", cfg.seeds.front());
    } else {
      r.read(root, "seeds", cfg.seeds);
    }
  } else {
    r.fail(root, "missing required key 'seeds'");
  }
  r.read(root, "eval_every", cfg.eval_every);
  r.read(root, "eval_episodes", cfg.eval_episodes);
  std::string log_path;
  if (r.read(root, "log_path", log_path)) cfg.log_path = log_path;
  r.read(root, "parallel", cfg.parallel);
  double stop = 0.0;
  if (r.read(root, "stop_at_return", stop)) cfg.stop_at_return = stop;

  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    r.fail(root, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string dump_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << cfg.name;
  out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(cfg.env.kind));
  out << YAML::Key << "n_rooms" << YAML::Value << cfg.env.n_rooms;
  out << YAML::Key << "room_size" << YAML::Value << cfg.env.room_size;
  out << YAML::Key << "chain_length" << YAML::Value << cfg.env.chain_length;
  if (cfg.env.max_steps) out << YAML::Key << "max_steps" << YAML::Value << *cfg.env.max_steps;
  if (cfg.env.step_penalty) out << YAML::Key << "step_penalty" << YAML::Value << *cfg.env.step_penalty;
  out << YAML::Key << "layout_seed_stream" << YAML::Value << cfg.env.layout_seed_stream;
  out << YAML::EndMap;

  const RapidConfig& a = cfg.agent.rapid;
  out << YAML::Key << "agent" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(a.mode));
  out << YAML::Key << "weights" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "w0" << YAML::Value << a.weights.w0;
  out << YAML::Key << "w1" << YAML::Value << a.weights.w1;
  out << YAML::Key << "w2" << YAML::Value << a.weights.w2;
  out << YAML::EndMap;
  out << YAML::Key << "buffer_size" << YAML::Value << a.buffer_size;
  out << YAML::Key << "bc_steps" << YAML::Value << a.bc_steps;
  out << YAML::Key << "bc_batch" << YAML::Value << a.bc_batch;
  out << YAML::Key << "anneal" << YAML::Value << a.anneal;
  out << YAML::Key << "anneal_horizon" << YAML::Value << a.anneal_horizon;
  out << YAML::Key << "count_bonus_coeff" << YAML::Value << a.count_bonus_coeff;
  out << YAML::Key << "keep_whole_episodes" << YAML::Value << a.keep_whole_episodes;
  out << YAML::Key << "hidden" << YAML::Value << YAML::Flow << cfg.agent.hidden;
  out << YAML::EndMap;

  const PpoConfig& p = cfg.agent.ppo;
  out << YAML::Key << "ppo" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gamma" << YAML::Value << p.gamma;
  out << YAML::Key << "lambda" << YAML::Value << p.lambda;
  out << YAML::Key << "clip" << YAML::Value << p.clip;
  out << YAML::Key << "vf_coef" << YAML::Value << p.vf_coef;
  out << YAML::Key << "ent_coef" << YAML::Value << p.ent_coef;
  out << YAML::Key << "lr" << YAML::Value << p.lr;
  out << YAML::Key << "max_grad_norm" << YAML::Value << p.max_grad_norm;
  out << YAML::Key << "nstep" << YAML::Value << p.nstep;
  out << YAML::Key << "epochs" << YAML::Value << p.epochs;
  out << YAML::Key << "minibatches" << YAML::Value << p.minibatches;
  out << YAML::EndMap;

  out << YAML::Key << "total_frames" << YAML::Value << cfg.total_frames;
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << cfg.seeds;
  out << YAML::Key << "eval_every" << YAML::Value << cfg.eval_every;
  out << YAML::Key << "eval_episodes" << YAML::Value << cfg.eval_episodes;
  out << YAML::Key << "log_path" << YAML::Value << cfg.log_path.string();
  out << YAML::Key << "parallel" << YAML::Value << cfg.parallel;
  if (cfg.stop_at_return) out << YAML::Key << "stop_at_return" << YAML::Value << *cfg.stop_at_return;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------

std::string csv_header() {
  std::string h;
  for (auto c : kCsvColumns) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h;
}

std::string format_row(const MetricsRow& row) {
  std::string s;
  s += std::to_string(row.frames) + ',';
  s += std::to_string(row.iteration) + ',';
  s += format_double(row.mean_return_100) + ',';
  s += format_double(row.s_local_mean) + ',';
  s += format_double(row.s_global_mean) + ',';
  s += std::to_string(row.buffer_len) + ',';
  s += format_double(row.buffer_min_score) + ',';
  s += format_double(row.ppo_loss) + ',';
  s += format_double(row.bc_loss) + ',';
  s += format_double(row.wall_seconds);
  return s;
}

MetricsRow parse_row(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != kCsvColumns.size())
    throw InvalidInput("metrics row: expected " + std::to_string(kCsvColumns.size()) + " fields, got " +
                       std::to_string(f.size()));
  MetricsRow r;
  r.frames = parse_int_field<std::int64_t>(f[0], kCsvColumns[0]);
  r.iteration = parse_int_field<std::int64_t>(f[1], kCsvColumns[1]);
  r.mean_return_100 = parse_double_field(f[2], kCsvColumns[2]);
  r.s_local_mean = parse_double_field(f[3], kCsvColumns[3]);
  r.s_global_mean = parse_double_field(f[4], kCsvColumns[4]);
  r.buffer_len = parse_int_field<std::int64_t>(f[5], kCsvColumns[5]);
  r.buffer_min_score = parse_double_field(f[6], kCsvColumns[6]);
  r.ppo_loss = parse_double_field(f[7], kCsvColumns[7]);
  r.bc_loss = parse_double_field(f[8], kCsvColumns[8]);
  r.wall_seconds = parse_double_field(f[9], kCsvColumns[9]);
  return r;
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    throw InvalidInput(path.string() + ": header does not match the metrics schema");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

MetricsRow MetricsWindow::row(const IterationMetrics& m, double wall_seconds) {
  for (const auto& e : m.episodes) {
    returns_.push_back(e.extrinsic_return);
    local_.push_back(e.score.s_local);
    global_.push_back(e.score.s_global);
    if (returns_.size() > kWindow) {
      returns_.pop_front();
      local_.pop_front();
      global_.pop_front();
    }
  }
  MetricsRow r;
  r.frames = m.frames;
  r.iteration = m.iteration;
  r.mean_return_100 = mean_of(returns_);
  r.s_local_mean = mean_of(local_);
  r.s_global_mean = mean_of(global_);
  r.buffer_len = static_cast<std::int64_t>(m.buffer.len);
  r.buffer_min_score = m.buffer.min_score;
  r.ppo_loss = m.ppo.loss;
  r.bc_loss = m.bc_loss;
  r.wall_seconds = wall_seconds;
  return r;
}

// ---------------------------------------------------------------------------

fs::path resolve_log_root(const ExperimentConfig& cfg) {
  if (const char* root = std::getenv("RAPID_LOG_ROOT"); root && *root) return fs::path(root);
  return cfg.log_path;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string stem = std::to_string(seed);
  SeedResult result;
  result.seed = seed;
  result.csv = dir / (stem + ".csv");
  result.checkpoint = dir / (stem + ".ckpt");
  result.max_return = kNaN;
  result.final_return = kNaN;

  std::ofstream csv(result.csv, std::ios::trunc);
  if (!csv) throw InvalidInput("cannot write " + result.csv.string());
  csv << csv_header() << '\n';
  std::ofstream eval_csv;
  if (cfg.eval_every > 0) {
    eval_csv.open(dir / (stem + ".eval.csv"), std::ios::trunc);
    eval_csv << "frames,mean_return,success_rate,mean_length,mean_distinct_obs,mean_local_score\n";
  }

  Trainer trainer(cfg.env, cfg.agent, seed, cfg.total_frames);
  MetricsWindow window;
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t log_every = std::max<std::int64_t>(cfg.total_frames / 10, 1);
  std::int64_t next_log = log_every;
  std::int64_t next_eval = cfg.eval_every;

  try {
    while (trainer.frames() < cfg.total_frames) {
      const IterationMetrics m = trainer.iterate();
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const MetricsRow row = window.row(m, wall);
      csv << format_row(row) << '\n';
      csv.flush();

      if (!std::isnan(row.mean_return_100)) {
        if (std::isnan(result.max_return) || row.mean_return_100 > result.max_return)
          result.max_return = row.mean_return_100;
      }
      result.final_return = row.mean_return_100;
      result.frames = row.frames;

      if (cfg.eval_every > 0 && row.frames >= next_eval) {
        const EvalResult ev =
            evaluate_policy(trainer.params(), cfg.env, cfg.eval_episodes, derive_seed(seed, "periodic-eval"));
        eval_csv << row.frames << ',' << format_double(ev.mean_return) << ',' << format_double(ev.success_rate)
                 << ',' << format_double(ev.mean_length) << ',' << format_double(ev.mean_distinct_obs) << ','
                 << format_double(ev.mean_local_score) << '\n';
        eval_csv.flush();
        next_eval += cfg.eval_every;
      }
      if (row.frames >= next_log) {
        log_line("[" + cfg.name + " seed " + stem + "] frames " + std::to_string(row.frames) +
                 " mean_return_100 " + format_double(row.mean_return_100));
        next_log += log_every;
      }
      if (cfg.stop_at_return && row.mean_return_100 >= *cfg.stop_at_return) {
        log_line("[" + cfg.name + " seed " + stem + "] reached " + format_double(*cfg.stop_at_return) +
                 " at frame " + std::to_string(row.frames) + ", stopping");
        break;
      }
    }
  } catch (const std::exception& e) {
    csv.flush();
    log_line("[" + cfg.name + " seed " + stem + "] failed at frame " + std::to_string(trainer.frames()) + ": " +
             e.what());
    throw;
  }
  nn::save_checkpoint(result.checkpoint, trainer.checkpoint());
  return result;
}

RunSummary summarize(std::string run, std::vector<SeedResult> seeds) {
  RunSummary s;
  s.run = std::move(run);
  s.seeds = std::move(seeds);
  if (s.seeds.empty()) return s;
  double sum = 0.0;
  for (const auto& r : s.seeds) sum += r.max_return;
  s.mean_max = sum / static_cast<double>(s.seeds.size());
  double var = 0.0;
  for (const auto& r : s.seeds) var += (r.max_return - s.mean_max) * (r.max_return - s.mean_max);
  s.std_max = std::sqrt(var / static_cast<double>(s.seeds.size()));
  return s;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["run"] = s.run;
  j["csv_schema_version"] = kCsvSchemaVersion;
  std::vector<std::uint64_t> seeds;
  std::vector<double> max_ret;
  std::vector<double> final_ret;
  for (const auto& r : s.seeds) {
    seeds.push_back(r.seed);
    max_ret.push_back(r.max_return);
    final_ret.push_back(r.final_return);
  }
  j["seeds"] = seeds;
  j["per_seed_max_return"] = max_ret;
  j["per_seed_final_return"] = final_ret;
  j["mean_max"] = s.mean_max;
  j["std_max"] = s.std_max;
  return j.dump(2) + "\n";
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path dir = resolve_log_root(cfg) / cfg.name;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.yaml", std::ios::trunc);
    out << dump_config(cfg);
  }

  std::vector<SeedResult> results(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  const auto work = [&](std::size_t i) {
    try {
      results[i] = run_seed(cfg, cfg.seeds[i], dir);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallel), cfg.seeds.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunSummary summary = summarize(cfg.name, std::move(results));
  summary.directory = dir;
  std::ofstream out(dir / "summary.json", std::ios::trunc);
  out << summary_json(summary);
  return summary;
}

ExperimentConfig apply_override(ExperimentConfig cfg, std::string_view param, std::string_view value) {
  const std::string field = "sweep value for " + std::string(param);
  if (param == "S") {
    cfg.agent.rapid.bc_steps = parse_int_field<int>(value, field);
  } else if (param == "D") {
    cfg.agent.rapid.buffer_size = parse_int_field<std::size_t>(value, field);
  } else if (param == "w1") {
    cfg.agent.rapid.weights.w1 = parse_number(value, field);
  } else if (param == "w2") {
    cfg.agent.rapid.weights.w2 = parse_number(value, field);
  } else {
    throw InvalidInput("unknown sweep parameter '" + std::string(param) + "' (expected S, D, w1 or w2)");
  }
  cfg.validate();
  return cfg;
}

std::vector<RunSummary> run_sweep(const ExperimentConfig& cfg, std::string_view param,
                                  std::span<const std::string> values) {
  if (values.empty()) throw InvalidInput("sweep needs at least one value");
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) {
    ExperimentConfig c = apply_override(cfg, param, v);
    c.name = cfg.name + "-" + std::string(param) + "-" + v;
    configs.push_back(std::move(c));
  }
  std::vector<RunSummary> out;
  for (const auto& c : configs) out.push_back(run_experiment(c));
  return out;
}

EvalResult evaluate_checkpoint(const fs::path& checkpoint, const EnvSpec& env, int episodes, std::uint64_t seed) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint);
  return evaluate_policy(ckpt.params, env, episodes, seed, true);
}

}  // namespace rapid
