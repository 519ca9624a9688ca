#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcsac/checkpoint.hpp"
#include "lcsac/encoder.hpp"
#include "lcsac/envs.hpp"
#include "lcsac/run_config.hpp"
#include "lcsac/sac.hpp"
#include "lcsac/stats.hpp"

namespace lcsac {

/// One coalesced metrics row: all events that happened at the same
/// environment step share a row (strictly increasing step column).
struct MetricsRow {
  std::int64_t step = 0;
  std::optional<double> eval_mean;
  std::optional<double> eval_std;
  std::optional<double> j_q1;
  std::optional<double> j_q2;
  std::optional<double> j_pi;
  std::optional<double> l_cp;
  std::optional<double> mi_lower_bound;
  std::optional<double> episode_return;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  double final_eval_mean = 0.0;
  double final_eval_std = 0.0;
  std::int64_t episodes = 0;
  std::int64_t env_resets = 0;
  std::int64_t stream_resets = 0;
  std::int64_t rl_updates = 0;
  std::int64_t rl_skips = 0;
  std::int64_t encoder_updates = 0;
  std::int64_t encoder_skips = 0;
  double wall_time_s = 0.0;

  /// metrics.csv rendering (header + one line per row, empty cells for
  /// absent values).
  std::string to_csv() const;
};

struct RunResult {
  RunMetrics metrics;
  Checkpoint final_checkpoint;
};

/// Runs the full three-phase training loop on `env`:
///   Phase 1 per step - stream the context, act (uniform during warmup),
///   record into both buffers with collection-time contexts;
///   Phase 2 every n_rl steps - rl_updates_per_trigger SAC updates;
///   Phase 3 every n_c steps - encoder updates (skipped while no full
///   segment exists);
///   every eval_interval steps - deterministic evaluation on a fresh env.
/// When config.out_dir is set, writes metrics.csv, sac_metrics.csv,
/// encoder_metrics.csv and checkpoints there. Deterministic per seed.
RunResult run_training(const RunConfig& config, Env& env);

/// Deterministic evaluation: mean actions, online context streaming, no
/// buffer writes or updates. Returns (mean, sample std) of undiscounted
/// returns. `encoder` may be null (context-free policy).
std::pair<double, double> evaluate(const GaussianPolicyParams& policy,
                                   const EncoderParams* encoder, Env& env,
                                   std::int64_t episodes, Rng& rng);

struct ArmSummary {
  std::string name;
  std::vector<double> final_returns;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;
};

struct CurvePoint {
  std::int64_t step = 0;
  double mean_a = 0.0, half_std_a = 0.0;
  double mean_b = 0.0, half_std_b = 0.0;
};

struct ComparisonReport {
  ArmSummary arm_a;
  ArmSummary arm_b;
  std::vector<CurvePoint> curve;
  WelchResult welch;
  /// Per-seed eval curves, for the plot command (step -> per-run mean).
  std::vector<std::vector<MetricsRow>> runs_a;
  std::vector<std::vector<MetricsRow>> runs_b;
};

/// Runs both configs across the given seeds and compares final evaluation
/// returns with Welch's t-test. The two configs must target the same
/// environment. Cells may run on `jobs` worker threads; each cell owns all
/// of its state, so parallelism cannot change any number.
ComparisonReport ab_experiment(const RunConfig& config_a,
                               const RunConfig& config_b,
                               const std::vector<std::uint64_t>& seeds,
                               const std::string& out_dir, int jobs = 1);

}  // namespace lcsac
