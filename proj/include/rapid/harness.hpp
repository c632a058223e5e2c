#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rapid/agent.hpp"
#include "rapid/env.hpp"

namespace rapid {

struct ExperimentConfig {
  std::string name = "run";
  EnvSpec env;
  AgentConfig agent;
  std::int64_t total_frames = 0;
  std::vector<std::uint64_t> seeds;
  std::int64_t eval_every = 0;  // frames; 0 disables periodic evaluation
  int eval_episodes = 20;
  std::filesystem::path log_path = "logs";
  int parallel = 1;  // seeds trained concurrently
  // Stop a seed early once mean_return_100 reaches this value.
  std::optional<double> stop_at_return;

  // Throws InvalidInput.
  void validate() const;
};

// Throws ConfigError with "source:line:col: message" diagnostics.
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Metrics CSV

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr std::array<std::string_view, 10> kCsvColumns{
    "frames",       "iteration",        "mean_return_100", "s_local_mean", "s_global_mean",
    "buffer_len",   "buffer_min_score", "ppo_loss",        "bc_loss",      "wall_seconds",
};

struct MetricsRow {
  std::int64_t frames = 0;
  std::int64_t iteration = 0;
  double mean_return_100 = 0.0;
  double s_local_mean = 0.0;
  double s_global_mean = 0.0;
  std::int64_t buffer_len = 0;
  double buffer_min_score = 0.0;
  double ppo_loss = 0.0;
  double bc_loss = 0.0;
  double wall_seconds = 0.0;
};

std::string csv_header();
// Shortest round-trip decimal; NaN is written as "nan".
std::string format_row(const MetricsRow& row);
// Throws InvalidInput naming the offending field.
MetricsRow parse_row(std::string_view line);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Sliding 100-episode window feeding the per-iteration CSV row.
class MetricsWindow {
 public:
  static constexpr std::size_t kWindow = 100;

  MetricsRow row(const IterationMetrics& m, double wall_seconds);

 private:
  std::deque<double> returns_;
  std::deque<double> local_;
  std::deque<double> global_;
};

// ---------------------------------------------------------------------------
// Runs

struct SeedResult {
  std::uint64_t seed = 0;
  double max_return = 0.0;    // max over rows of mean_return_100
  double final_return = 0.0;  // last row's mean_return_100
  std::int64_t frames = 0;
  std::filesystem::path csv;
  std::filesystem::path checkpoint;
};

struct RunSummary {
  std::string run;
  std::vector<SeedResult> seeds;
  double mean_max = 0.0;
  double std_max = 0.0;  // population std across seeds
  std::filesystem::path directory;
};

// RAPID_LOG_ROOT, when set, replaces cfg.log_path.
std::filesystem::path resolve_log_root(const ExperimentConfig& cfg);

// Trains one seed, writing <dir>/<seed>.csv, <seed>.ckpt and, with
// evaluation enabled, <seed>.eval.csv.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

// All seeds plus <log_root>/<name>/summary.json.
RunSummary run_experiment(const ExperimentConfig& cfg);

RunSummary summarize(std::string run, std::vector<SeedResult> seeds);
// Keys: run, csv_schema_version, seeds, per_seed_max_return,
// per_seed_final_return, mean_max, std_max.
std::string summary_json(const RunSummary& s);

// `param` is one of S, D, w1, w2.
ExperimentConfig apply_override(ExperimentConfig cfg, std::string_view param, std::string_view value);
std::vector<RunSummary> run_sweep(const ExperimentConfig& cfg, std::string_view param,
                                  std::span<const std::string> values);

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const EnvSpec& env, int episodes,
                               std::uint64_t seed);

}  // namespace rapid
