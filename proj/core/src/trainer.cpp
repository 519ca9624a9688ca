#include "lcsac/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "lcsac/errors.hpp"
#include "lcsac/io.hpp"
#include "lcsac/rng.hpp"

namespace lcsac {
namespace {

std::string csv_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

/// Merges events that land on the same environment step into one row,
/// keeping the step column strictly increasing.
class RowCoalescer {
 public:
  MetricsRow& row_at(std::int64_t step, std::vector<MetricsRow>& rows) {
    if (!rows.empty() && rows.back().step == step) return rows.back();
    if (!rows.empty() && rows.back().step > step)
      throw ContractError("metrics rows must be appended in step order");
    rows.push_back(MetricsRow{step});
    return rows.back();
  }
};

struct StreamSet {
  Rng env;
  Rng warmup;
  Rng action_noise;
  Rng context_noise;
  Rng rl_batch;
  Rng update_noise;
  Rng segment_batch;
  Rng encoder_noise;
  std::uint64_t master;

  explicit StreamSet(std::uint64_t seed)
      : env(Rng::derive(seed, "env")),
        warmup(Rng::derive(seed, "warmup-action")),
        action_noise(Rng::derive(seed, "action-noise")),
        context_noise(Rng::derive(seed, "context-noise")),
        rl_batch(Rng::derive(seed, "rl-batch")),
        update_noise(Rng::derive(seed, "update-noise")),
        segment_batch(Rng::derive(seed, "segment-batch")),
        encoder_noise(Rng::derive(seed, "encoder-noise")),
        master(seed) {}
};

enum class Phase { kCollect, kUpdate, kEval };

}  // namespace

std::string RunMetrics::to_csv() const {
  std::string csv =
      "step,eval_mean,eval_std,j_q1,j_q2,j_pi,l_cp,mi_lower_bound,"
      "episode_return\n";
  for (const MetricsRow& r : rows) {
    csv += std::to_string(r.step);
    csv += ',';
    csv += csv_cell(r.eval_mean);
    csv += ',';
    csv += csv_cell(r.eval_std);
    csv += ',';
    csv += csv_cell(r.j_q1);
    csv += ',';
    csv += csv_cell(r.j_q2);
    csv += ',';
    csv += csv_cell(r.j_pi);
    csv += ',';
    csv += csv_cell(r.l_cp);
    csv += ',';
    csv += csv_cell(r.mi_lower_bound);
    csv += ',';
    csv += csv_cell(r.episode_return);
    csv += '\n';
  }
  return csv;
}

std::pair<double, double> evaluate(const GaussianPolicyParams& policy,
                                   const EncoderParams* encoder, Env& env,
                                   std::int64_t episodes, Rng& rng) {
  if (episodes < 1) throw ContractError("evaluate: episodes must be >= 1");
  const EnvSpec& spec = env.spec();
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  std::optional<EncoderStream> stream;
  if (encoder != nullptr) stream.emplace(*encoder);

  for (std::int64_t ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = env.reset(rng);
    std::vector<double> context;
    if (stream) {
      stream->reset();
      context = stream->initial_context().value;
    }
    double total = 0.0;
    bool done = false;
    while (!done) {
      std::vector<double> input = obs;
      input.insert(input.end(), context.begin(), context.end());
      const std::vector<double> canonical = policy_act_mean(policy, input);
      const StepResult result = env.step(to_env_action(spec, canonical));
      total += result.reward;
      if (stream) context = stream->step(obs, canonical, result.reward).value;
      obs = result.observation;
      done = result.done;
    }
    returns.push_back(total);
  }
  return {mean_of(returns), std_of(returns)};
}

RunResult run_training(const RunConfig& config, Env& env) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const EnvSpec& spec = env.spec();
  const std::int64_t s_dim = spec.obs_dim;
  const std::int64_t a_dim = spec.action_dim;
  const std::int64_t c_dim = config.encoder.context_dim;
  const bool use_encoder = c_dim > 0;

  StreamSet streams(config.train.seed);
  Rng policy_init = Rng::derive(config.train.seed, "policy-init");
  Rng critic_init = Rng::derive(config.train.seed, "critic-init");
  Rng encoder_init = Rng::derive(config.train.seed, "encoder-init");

  GaussianPolicyParams policy = GaussianPolicyParams::init(
      {s_dim + c_dim, config.mlp_hidden, a_dim}, policy_init);
  AdamState policy_opt;
  CriticEnsemble critics =
      CriticEnsemble::init(s_dim, a_dim, c_dim, config.mlp_hidden, critic_init);

  std::optional<EncoderParams> encoder;
  std::optional<EncoderStream> stream;
  AdamState encoder_opt;
  if (use_encoder) {
    EncoderConfig enc_cfg;
    enc_cfg.s_dim = s_dim;
    enc_cfg.a_dim = a_dim;
    enc_cfg.context_dim = c_dim;
    enc_cfg.hidden = config.encoder.hidden;
    enc_cfg.mode = config.encoder.mode;
    enc_cfg.e_mode = config.encoder.e_mode;
    encoder.emplace(EncoderParams::init(enc_cfg, encoder_init));
    stream.emplace(*encoder);
  }

  std::optional<ContextBuffer> d_c;
  if (use_encoder) d_c.emplace(config.replay_capacity, s_dim, a_dim);
  RlBuffer d_rl(config.replay_capacity, c_dim, s_dim, a_dim);

  RunResult out;
  RunMetrics& metrics = out.metrics;
  RowCoalescer rows;
  const bool writing = !config.out_dir.empty();
  std::string sac_csv = "step,j_q1,j_q2,j_pi,mean_q,entropy_estimate\n";
  std::string encoder_csv = "step,l_cp,kl,mi_lower_bound\n";

  Phase phase = Phase::kCollect;
  auto require_phase = [&](Phase want, const char* what) {
    if (phase != want)
      throw ContractError(std::string("phase violation in ") + what);
  };

  std::vector<double> obs = env.reset(streams.env);
  metrics.env_resets += 1;
  std::vector<double> context(static_cast<std::size_t>(c_dim), 0.0);
  if (stream) metrics.stream_resets += 1;  // fresh stream counts as a reset
  double episode_return = 0.0;

  const CriticTermInputs critic_term{&config.sac, &critics, &policy};
  const bool need_critic_term = config.encoder.beta1 > 0.0;

  auto save_checkpoint = [&](std::int64_t step, const std::string& name) {
    if (!writing) return;
    Checkpoint ck;
    ck.env_step = step;
    ck.config_hash = config.hash();
    ck.sections.emplace("policy", policy.params);
    ck.sections.emplace("critic1", critics.q1.params);
    ck.sections.emplace("critic2", critics.q2.params);
    ck.sections.emplace("target1", critics.target_q1.params);
    ck.sections.emplace("target2", critics.target_q2.params);
    if (encoder) ck.sections.emplace("encoder", encoder->params);
    ck.save(config.out_dir + "/" + name);
  };

  for (std::int64_t t = 1; t <= config.train.total_steps; ++t) {
    // Phase 1: collect one environment step.
    require_phase(Phase::kCollect, "environment step");
    std::vector<double> canonical(static_cast<std::size_t>(a_dim));
    if (t <= config.train.warmup_steps) {
      for (double& v : canonical) v = streams.warmup.uniform(-1.0, 1.0);
    } else {
      std::vector<double> noise(static_cast<std::size_t>(a_dim));
      for (double& v : noise) v = streams.action_noise.normal();
      std::vector<double> input = obs;
      input.insert(input.end(), context.begin(), context.end());
      try {
        canonical = policy_act(policy, input, noise);
      } catch (const NumericError& e) {
        throw TrainingAbort(t, "policy action", e.what());
      }
    }

    const StepResult result = env.step(to_env_action(spec, canonical));
    episode_return += result.reward;

    Transition transition{obs, canonical, result.reward, result.observation,
                          result.done};
    if (d_c) d_c->push(transition);

    std::vector<double> context_next;
    if (stream) {
      ContextVariable c_next = stream->step(obs, canonical, result.reward);
      if (c_next.probabilistic()) c_next.sample(streams.context_noise);
      context_next = std::move(c_next.value);
    }
    d_rl.push({context, obs, canonical, result.reward, result.observation,
               context_next, result.done});

    obs = result.observation;
    context = std::move(context_next);
    if (!stream) context.assign(static_cast<std::size_t>(c_dim), 0.0);

    if (result.done) {
      rows.row_at(t, metrics.rows).episode_return = episode_return;
      metrics.episodes += 1;
      episode_return = 0.0;
      obs = env.reset(streams.env);
      metrics.env_resets += 1;
      if (stream) {
        stream->reset();
        metrics.stream_resets += 1;
        context = stream->initial_context().value;
      }
    }

    // Updates start strictly after the warmup window, so a run with
    // total_steps == warmup_steps only fills the buffers.
    const bool past_warmup = t > config.train.warmup_steps;

    // Phase 2: soft policy iteration.
    if (past_warmup && t % config.train.n_rl == 0 &&
        config.train.rl_updates_per_trigger > 0) {
      phase = Phase::kUpdate;
      double sum_q1 = 0.0, sum_q2 = 0.0, sum_pi = 0.0;
      std::int64_t done_updates = 0;
      for (std::int64_t k = 0; k < config.train.rl_updates_per_trigger; ++k) {
        std::optional<SacUpdateMetrics> m;
        try {
          m = sac_update(config.sac, critics, policy, policy_opt, d_rl,
                         streams.rl_batch, streams.update_noise);
        } catch (const NumericError& e) {
          throw TrainingAbort(t, "sac update", e.what());
        }
        if (!m) {
          metrics.rl_skips += 1;
          continue;
        }
        if (!std::isfinite(m->j_q1) || !std::isfinite(m->j_q2) ||
            !std::isfinite(m->j_pi))
          throw TrainingAbort(t, "sac loss", "non-finite SAC loss");
        metrics.rl_updates += 1;
        done_updates += 1;
        sum_q1 += m->j_q1;
        sum_q2 += m->j_q2;
        sum_pi += m->j_pi;
        if (writing) {
          sac_csv += std::to_string(t);
          sac_csv += ',';
          sac_csv += format_double(m->j_q1);
          sac_csv += ',';
          sac_csv += format_double(m->j_q2);
          sac_csv += ',';
          sac_csv += format_double(m->j_pi);
          sac_csv += ',';
          sac_csv += format_double(m->mean_q);
          sac_csv += ',';
          sac_csv += format_double(m->entropy_estimate);
          sac_csv += '\n';
        }
      }
      if (done_updates > 0) {
        MetricsRow& row = rows.row_at(t, metrics.rows);
        row.j_q1 = sum_q1 / static_cast<double>(done_updates);
        row.j_q2 = sum_q2 / static_cast<double>(done_updates);
        row.j_pi = sum_pi / static_cast<double>(done_updates);
      }
      phase = Phase::kCollect;
    }

    // Phase 3: encoder updates.
    if (use_encoder && past_warmup && t % config.train.n_c == 0 &&
        config.train.encoder_updates_per_trigger > 0) {
      phase = Phase::kUpdate;
      double sum_cp = 0.0, sum_mi = 0.0;
      std::int64_t done_updates = 0;
      for (std::int64_t k = 0; k < config.train.encoder_updates_per_trigger;
           ++k) {
        if (d_c->valid_window_count(config.encoder.segment_len) == 0) {
          metrics.encoder_skips += 1;
          break;  // no full segment yet; skip the whole trigger quietly
        }
        const SegmentBatch batch = d_c->sample_segments(
            config.encoder.batch, config.encoder.segment_len,
            streams.segment_batch);
        EncoderUpdateMetrics m;
        try {
          m = encoder_update(*encoder, encoder_opt, batch, config.encoder.lr,
                             config.encoder.beta1, config.encoder.beta2,
                             need_critic_term ? &critic_term : nullptr,
                             &streams.encoder_noise);
        } catch (const NumericError& e) {
          throw TrainingAbort(t, "encoder objective", e.what());
        }
        metrics.encoder_updates += 1;
        done_updates += 1;
        sum_cp += m.loss_cp;
        sum_mi += m.mi_bound;
        if (writing) {
          encoder_csv += std::to_string(t);
          encoder_csv += ',';
          encoder_csv += format_double(m.loss_cp);
          encoder_csv += ',';
          encoder_csv += format_double(m.kl);
          encoder_csv += ',';
          encoder_csv += format_double(m.mi_bound);
          encoder_csv += '\n';
        }
      }
      if (done_updates > 0) {
        MetricsRow& row = rows.row_at(t, metrics.rows);
        row.l_cp = sum_cp / static_cast<double>(done_updates);
        row.mi_lower_bound = sum_mi / static_cast<double>(done_updates);
      }
      phase = Phase::kCollect;
    }

    // Periodic deterministic evaluation (always once at the end).
    const bool eval_due = t % config.train.eval_interval == 0 ||
                          t == config.train.total_steps;
    if (eval_due) {
      phase = Phase::kEval;
      std::unique_ptr<Env> eval_env = env.clone_fresh();
      Rng eval_rng = Rng::derive(config.train.seed, "eval",
                                 static_cast<std::uint64_t>(t));
      const auto [mean, stddev] =
          evaluate(policy, encoder ? &*encoder : nullptr, *eval_env,
                   config.train.eval_episodes, eval_rng);
      MetricsRow& row = rows.row_at(t, metrics.rows);
      row.eval_mean = mean;
      row.eval_std = stddev;
      metrics.final_eval_mean = mean;
      metrics.final_eval_std = stddev;
      save_checkpoint(t, "checkpoint_step_" + std::to_string(t) + ".json");
      phase = Phase::kCollect;
    }
  }

  metrics.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  out.final_checkpoint.env_step = config.train.total_steps;
  out.final_checkpoint.config_hash = config.hash();
  out.final_checkpoint.sections.emplace("policy", policy.params);
  out.final_checkpoint.sections.emplace("critic1", critics.q1.params);
  out.final_checkpoint.sections.emplace("critic2", critics.q2.params);
  out.final_checkpoint.sections.emplace("target1", critics.target_q1.params);
  out.final_checkpoint.sections.emplace("target2", critics.target_q2.params);
  if (encoder)
    out.final_checkpoint.sections.emplace("encoder", encoder->params);

  if (writing) {
    write_file_atomic(config.out_dir + "/metrics.csv", metrics.to_csv());
    write_file_atomic(config.out_dir + "/sac_metrics.csv", sac_csv);
    if (use_encoder)
      write_file_atomic(config.out_dir + "/encoder_metrics.csv", encoder_csv);
    out.final_checkpoint.save(config.out_dir + "/checkpoint_final.json");
  }
  return out;
}

namespace {

std::vector<MetricsRow> eval_rows_of(const RunMetrics& metrics) {
  std::vector<MetricsRow> rows;
  for (const MetricsRow& r : metrics.rows)
    if (r.eval_mean) rows.push_back(r);
  return rows;
}

}  // namespace

ComparisonReport ab_experiment(const RunConfig& config_a,
                               const RunConfig& config_b,
                               const std::vector<std::uint64_t>& seeds,
                               const std::string& out_dir, int jobs) {
  if (config_a.env_name != config_b.env_name)
    throw ConfigError("ab_experiment: both arms must use the same environment "
                      "(got '" + config_a.env_name + "' vs '" +
                      config_b.env_name + "')");
  if (seeds.size() < 2)
    throw ConfigError("ab_experiment: need at least 2 seeds");
  config_a.validate();
  config_b.validate();

  struct Cell {
    RunConfig config;
    RunMetrics metrics;
  };
  std::vector<Cell> cells;
  for (int arm = 0; arm < 2; ++arm) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      Cell cell;
      cell.config = arm == 0 ? config_a : config_b;
      cell.config.train.seed = seeds[i];
      if (!out_dir.empty())
        cell.config.out_dir = out_dir + (arm == 0 ? "/arm_a" : "/arm_b") +
                              "/seed_" + std::to_string(seeds[i]);
      cells.push_back(std::move(cell));
    }
  }

  auto run_cell = [](Cell& cell) {
    std::unique_ptr<Env> env = make_env(cell.config.env_name, cell.config.env);
    cell.metrics = run_training(cell.config, *env).metrics;
  };

  const int workers = std::max(1, jobs);
  if (workers == 1) {
    for (Cell& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(cells.size());
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          try {
            run_cell(cells[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ComparisonReport report;
  report.arm_a.name = "arm_a";
  report.arm_b.name = "arm_b";
  const std::size_t n = seeds.size();
  for (std::size_t i = 0; i < n; ++i) {
    report.runs_a.push_back(eval_rows_of(cells[i].metrics));
    report.runs_b.push_back(eval_rows_of(cells[n + i].metrics));
    report.arm_a.final_returns.push_back(cells[i].metrics.final_eval_mean);
    report.arm_b.final_returns.push_back(cells[n + i].metrics.final_eval_mean);
  }
  report.arm_a.mean = mean_of(report.arm_a.final_returns);
  report.arm_a.stddev = std_of(report.arm_a.final_returns);
  report.arm_b.mean = mean_of(report.arm_b.final_returns);
  report.arm_b.stddev = std_of(report.arm_b.final_returns);
  report.welch = welch_t_test(report.arm_a.final_returns,
                              report.arm_b.final_returns);

  // Aggregate curves; all runs of an arm share the eval schedule.
  const std::size_t points = report.runs_a.front().size();
  for (const auto& run : report.runs_a)
    if (run.size() != points)
      throw ContractError("ab_experiment: eval schedules diverged");
  for (std::size_t p = 0; p < points; ++p) {
    CurvePoint point;
    point.step = report.runs_a.front()[p].step;
    std::vector<double> va, vb;
    for (const auto& run : report.runs_a) va.push_back(*run[p].eval_mean);
    for (const auto& run : report.runs_b) vb.push_back(*run[p].eval_mean);
    point.mean_a = mean_of(va);
    point.half_std_a = 0.5 * std_of(va);
    point.mean_b = mean_of(vb);
    point.half_std_b = 0.5 * std_of(vb);
    report.curve.push_back(point);
  }
  return report;
}

}  // namespace lcsac
