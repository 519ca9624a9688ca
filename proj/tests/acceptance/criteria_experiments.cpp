#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>

#include "acceptance.hpp"
#include "lcsac/cli.hpp"
#include "lcsac/errors.hpp"
#include "lcsac/envs.hpp"
#include "lcsac/io.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/trainer.hpp"

namespace acceptance {

using namespace lcsac;
using nlohmann::json;

namespace {

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

std::string fmt_arm(const ArmSummary& arm) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.2f+-%.2f", arm.mean, arm.stddev);
  return buf;
}

}  // namespace

RunConfig desk_config() {
  RunConfig config;
  config.env_name = "goal-reach";
  config.env.goal_count = 10;
  config.env.horizon = 100;
  config.train.total_steps = 200000;
  config.train.warmup_steps = 10000;
  config.train.n_rl = 50;
  config.train.rl_updates_per_trigger = 5;
  config.train.n_c = 500;
  config.train.encoder_updates_per_trigger = 15;
  config.train.eval_interval = 10000;
  config.train.eval_episodes = 10;
  config.sac.alpha = 0.1;
  config.sac.batch = 128;
  config.encoder.context_dim = 10;
  config.encoder.hidden = 32;
  config.encoder.segment_len = 20;
  config.encoder.batch = 128;
  config.encoder.lr = 1e-3;
  config.mlp_hidden = 32;
  config.replay_capacity = 1000000;
  return config;
}

Outcome c4_nonstationary_advantage() {
  RunConfig lc_sac = desk_config();
  RunConfig sac = lc_sac;
  sac.encoder.context_dim = 0;

  const std::string out = work_dir() + "/c4";
  std::filesystem::remove_all(out);
  const ComparisonReport report = ab_experiment(lc_sac, sac, kSeeds, out, 1);

  const bool exceeds = report.arm_a.mean > report.arm_b.mean;
  const bool significant = report.welch.p_one_sided < 0.05;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "LC-SAC %s vs SAC %s over %zu seeds at 2e5 steps, one-sided "
                "Welch p=%.4g",
                fmt_arm(report.arm_a).c_str(), fmt_arm(report.arm_b).c_str(),
                kSeeds.size(), report.welch.p_one_sided);
  return {exceeds && significant, detail};
}

Outcome c5_stationary_parity() {
  RunConfig lc_sac = desk_config();
  lc_sac.env_name = "stationary-reach";
  lc_sac.train.total_steps = 100000;
  RunConfig sac = lc_sac;
  sac.encoder.context_dim = 0;

  const std::string out = work_dir() + "/c5";
  std::filesystem::remove_all(out);
  const ComparisonReport report = ab_experiment(lc_sac, sac, kSeeds, out, 1);

  // Normalization: the spread of the greedy-controller return over a frozen
  // 100-episode protocol.
  auto env = make_env(lc_sac.env_name, lc_sac.env);
  double oracle_min = 1e300, oracle_max = -1e300;
  Rng seed_stream = Rng::derive(12345, "oracle-range");
  for (int i = 0; i < 100; ++i) {
    const double ret = optimal_return_oracle(*env, seed_stream.next_u64());
    oracle_min = std::min(oracle_min, ret);
    oracle_max = std::max(oracle_max, ret);
  }
  const double range = oracle_max - oracle_min;
  const double gap = std::abs(report.arm_a.mean - report.arm_b.mean);

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "LC-SAC %s vs SAC %s, |gap| %.2f vs 10%% of oracle range "
                "%.2f (range %.2f)",
                fmt_arm(report.arm_a).c_str(), fmt_arm(report.arm_b).c_str(),
                gap, 0.1 * range, range);
  return {gap <= 0.1 * range, detail};
}

Outcome c6_ablation_directions() {
  const std::string out = work_dir() + "/c6";
  std::filesystem::remove_all(out);
  std::filesystem::create_directories(out);

  // Ablation arms around the deterministic-context, 1e6-replay default.
  RunConfig det = desk_config();
  RunConfig prob = det;
  prob.encoder.mode = ContextMode::kProbabilistic;
  prob.encoder.beta2 = 0.2;
  RunConfig replay_small = det;
  replay_small.replay_capacity = 100000;

  write_file_atomic(out + "/det.json", det.to_json());
  write_file_atomic(out + "/prob.json", prob.to_json());
  write_file_atomic(out + "/replay_large.json", det.to_json());
  write_file_atomic(out + "/replay_small.json", replay_small.to_json());

  // Reports come from the compare command itself.
  auto run_compare = [&](const std::string& a, const std::string& b,
                         const std::string& sub) {
    const int rc = cli::cmd_compare({"--config-a", out + "/" + a,
                                     "--config-b", out + "/" + b, "--seeds",
                                     "1,2,3,4,5", "--out", out + "/" + sub,
                                     "--jobs", "1"});
    if (rc != 0) throw Error("cmd_compare failed for " + sub);
    return json::parse(read_file(out + "/" + sub + "/comparison.json"));
  };

  const json mode_report = run_compare("det.json", "prob.json", "mode");
  const double det_mean = mode_report.at("arm_a").at("mean").get<double>();
  const double prob_mean = mode_report.at("arm_b").at("mean").get<double>();

  const json replay_report =
      run_compare("replay_large.json", "replay_small.json", "replay");
  const double large_mean = replay_report.at("arm_a").at("mean").get<double>();
  const double small_mean = replay_report.at("arm_b").at("mean").get<double>();

  const bool mode_ok = det_mean >= prob_mean;
  const bool replay_ok = small_mean <= large_mean;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "deterministic %.2f vs probabilistic %.2f (det >= prob: %s); "
                "replay 1e6 %.2f vs 1e5 %.2f (1e5 <= 1e6: %s)",
                det_mean, prob_mean, mode_ok ? "yes" : "NO", large_mean,
                small_mean, replay_ok ? "yes" : "NO");
  return {mode_ok && replay_ok, detail};
}

}  // namespace acceptance
