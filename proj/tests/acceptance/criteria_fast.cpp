#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "acceptance.hpp"
#include "lcsac/encoder.hpp"
#include "lcsac/envs.hpp"
#include "lcsac/io.hpp"
#include "lcsac/replay.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/sac.hpp"
#include "lcsac/trainer.hpp"
#include "support/fd_check.hpp"
#include "support/list_model.hpp"
#include "support/plain_sac.hpp"

namespace acceptance {

using namespace lcsac;
using lcsac::testing::check_gradients;
using lcsac::testing::fd_rel_err;
using lcsac::testing::GraphBuilder;

std::string work_dir() {
  return (std::filesystem::temp_directory_path() / "lcsac_acceptance")
      .string();
}

namespace {

constexpr double kGradTol = 1e-4;

Tensor rand_t(std::vector<std::int64_t> shape, Rng& rng, double lo = -2.0,
              double hi = 2.0) {
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

Tensor rand_away_from_kinks(std::vector<std::int64_t> shape, Rng& rng) {
  Tensor t = rand_t(std::move(shape), rng);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    if (std::abs(t.at(i)) < 1e-2) t.at(i) += t.at(i) >= 0 ? 0.05 : -0.05;
  return t;
}

struct FdStats {
  double max_rel = 0.0;
  std::int64_t instances = 0;
  void fold(double rel) { max_rel = std::max(max_rel, rel); }
};

/// FD over every component of every leaf, `instances` random instances.
void check_op_family(const char* name, FdStats& stats, Rng& rng,
                     const GraphBuilder& build,
                     const std::function<std::vector<Tensor>(Rng&)>& make,
                     int instances = 100) {
  for (int i = 0; i < instances; ++i) {
    const auto report = check_gradients(build, make(rng));
    stats.fold(report.max_rel_err);
    stats.instances += 1;
  }
  std::printf("  ops: %-18s max rel err %.3g\n", name, stats.max_rel);
}

SegmentBatch random_segment_batch(Rng& rng, std::int64_t n, std::int64_t l) {
  SegmentBatch batch;
  batch.segment_len = l;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<Transition> seg;
    for (std::int64_t t = 0; t < l; ++t) {
      Transition tr;
      tr.s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      tr.a = {rng.uniform(-1, 1)};
      tr.r = rng.uniform(-1, 1);
      tr.s_next = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      tr.done = false;
      seg.push_back(std::move(tr));
    }
    batch.segments.push_back(std::move(seg));
    batch.source_indices.push_back(i);
  }
  return batch;
}

std::vector<RlTuple> random_rl_batch(Rng& rng, int n, std::int64_t c_dim) {
  std::vector<RlTuple> batch;
  for (int i = 0; i < n; ++i) {
    RlTuple t;
    for (std::int64_t k = 0; k < c_dim; ++k) t.c.push_back(rng.uniform(-1, 1));
    t.s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    t.a = {rng.uniform(-0.9, 0.9)};
    t.r = rng.uniform(-1, 1);
    t.s_next = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (std::int64_t k = 0; k < c_dim; ++k)
      t.c_next.push_back(rng.uniform(-1, 1));
    t.done = false;
    batch.push_back(std::move(t));
  }
  return batch;
}

/// Probes `probes` random parameter components of a scalar function against
/// central differences.
template <typename Params, typename Eval>
double probe_params_fd(Params& params, const std::vector<Tensor>& grads,
                       const Eval& eval, Rng& pick, int probes) {
  double max_rel = 0.0;
  const double h = 1e-5;
  for (int probe = 0; probe < probes; ++probe) {
    const std::size_t p =
        static_cast<std::size_t>(pick.uniform_int(
            static_cast<std::int64_t>(params.size())));
    const std::int64_t j = pick.uniform_int(params.at(p).numel());
    const double saved = params.at(p).at(j);
    params.at(p).at(j) = saved + h;
    const double up = eval();
    params.at(p).at(j) = saved - h;
    const double dn = eval();
    params.at(p).at(j) = saved;
    max_rel = std::max(max_rel,
                       fd_rel_err(grads[p].at(j), (up - dn) / (2 * h)));
  }
  return max_rel;
}

}  // namespace

Outcome c1_gradient_correctness() {
  Rng rng(20260808);
  FdStats op_stats;

  // --- every tape op, 100 random instances each ---
  check_op_family("add", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.add(v[0], v[1]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({2, 3}, r),
                                               rand_t({2, 3}, r)};
                  });
  check_op_family("sub", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.mul(t.sub(v[0], v[1]), v[0]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({4}, r), rand_t({4}, r)};
                  });
  check_op_family("elementwise-mul", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.mean(t.mul(v[0], v[1]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({3, 2}, r),
                                               rand_t({3, 2}, r)};
                  });
  check_op_family("matmul", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.matmul(v[0], v[1]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({2, 4}, r),
                                               rand_t({4, 3}, r)};
                  });
  check_op_family("relu", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.relu(v[0]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_away_from_kinks({3, 3}, r)};
                  });
  check_op_family("tanh", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.tanh(v[0]));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({5}, r)}; });
  check_op_family("sigmoid", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.sigmoid(v[0]));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({5}, r)}; });
  check_op_family("exp", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.exp(v[0]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({5}, r, -1, 1)};
                  });
  check_op_family("log", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.log(v[0]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({5}, r, 0.4, 3.0)};
                  });
  check_op_family("negate", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.negate(t.tanh(v[0])));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({5}, r)}; });
  check_op_family("sum", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.mul(v[0], v[0]));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({6}, r)}; });
  check_op_family("mean", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.mean(t.mul(v[0], v[0]));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({6}, r)}; });
  check_op_family("concat-last-axis", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.tanh(t.concat_cols(v[0], v[1])));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({2, 2}, r),
                                               rand_t({2, 3}, r)};
                  });
  check_op_family("slice", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(
                        t.mul(t.slice_cols(v[0], 0, 2), t.slice_cols(v[0], 2, 4)));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({3, 4}, r)}; });
  check_op_family("log-sum-exp", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.add(t.logsumexp(v[0], 1),
                                       t.transpose(t.logsumexp(v[0], 0))));
                  },
                  [](Rng& r) { return std::vector<Tensor>{rand_t({3, 3}, r)}; });
  check_op_family("squared-difference", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.mean(t.squared_diff(v[0], v[1]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({4}, r), rand_t({4}, r)};
                  });
  check_op_family("transpose", op_stats, rng,
                  [](Tape& t, const std::vector<Value>& v) {
                    return t.sum(t.matmul(t.transpose(v[0]), v[1]));
                  },
                  [](Rng& r) {
                    return std::vector<Tensor>{rand_t({3, 2}, r),
                                               rand_t({3, 2}, r)};
                  });
  if (op_stats.max_rel >= kGradTol)
    return {false, "op gradients max rel err " +
                       std::to_string(op_stats.max_rel)};

  // --- composite losses, 100 random instances each ---
  double composite_max = 0.0;
  Rng pick(7);

  // Eq. 4 path: InfoNCE through the encoder (deterministic).
  for (int i = 0; i < 100; ++i) {
    EncoderConfig cfg{2, 1, 3, 5, ContextMode::kDeterministic};
    EncoderParams enc = EncoderParams::init(cfg, rng);
    SegmentBatch batch = random_segment_batch(rng, 4, 3);
    auto [value, grads] = encoder_objective_with_grads(enc, batch, 0, 0);
    composite_max = std::max(
        composite_max,
        probe_params_fd(enc.params, grads,
                        [&] { return encoder_objective(enc, batch, 0, 0); },
                        pick, 6));
  }
  std::printf("  composite: infonce (Eq.4)            max rel err %.3g\n",
              composite_max);

  // Eq. 5 path: probabilistic objective with the KL term.
  for (int i = 0; i < 100; ++i) {
    EncoderConfig cfg{2, 1, 3, 5, ContextMode::kProbabilistic};
    EncoderParams enc = EncoderParams::init(cfg, rng);
    SegmentBatch batch = random_segment_batch(rng, 4, 3);
    auto eval = [&] {
      Rng noise(99);
      return encoder_objective(enc, batch, 0, 0.2, nullptr, &noise);
    };
    Rng noise(99);
    auto [value, grads] =
        encoder_objective_with_grads(enc, batch, 0, 0.2, nullptr, &noise);
    composite_max =
        std::max(composite_max,
                 probe_params_fd(enc.params, grads, eval, pick, 6));
  }
  std::printf("  composite: objective+KL (Eq.5)       max rel err %.3g\n",
              composite_max);

  // Eq. 5 with the critic-loss term (targets frozen: they are gradient-
  // blocked by contract, so the differentiable object holds them fixed).
  {
    Rng term_rng(17);
    SacConfig sac;
    for (int i = 0; i < 100; ++i) {
      EncoderConfig cfg{2, 1, 3, 5, ContextMode::kDeterministic};
      EncoderParams enc = EncoderParams::init(cfg, rng);
      SegmentBatch batch = random_segment_batch(rng, 4, 3);
      CriticEnsemble critics = CriticEnsemble::init(2, 1, 3, 6, term_rng);
      GaussianPolicyParams policy =
          GaussianPolicyParams::init({5, 6, 1}, term_rng);
      std::vector<double> targets;
      for (int k = 0; k < 4; ++k) targets.push_back(rng.uniform(-1, 1));
      CriticTermInputs inputs{&sac, &critics, &policy, &targets};
      auto eval = [&] {
        return encoder_objective(enc, batch, 0.7, 0, &inputs);
      };
      auto [value, grads] =
          encoder_objective_with_grads(enc, batch, 0.7, 0, &inputs);
      composite_max =
          std::max(composite_max,
                   probe_params_fd(enc.params, grads, eval, pick, 6));
    }
    std::printf("  composite: objective+critic (Eq.5/6) max rel err %.3g\n",
                composite_max);
  }

  // Eq. 6 path: twin critic regression.
  for (int i = 0; i < 100; ++i) {
    Rng net_rng(rng.next_u64());
    CriticEnsemble critics = CriticEnsemble::init(2, 1, 2, 6, net_rng);
    auto batch = random_rl_batch(rng, 4, 2);
    std::vector<double> targets;
    for (int k = 0; k < 4; ++k) targets.push_back(rng.uniform(-1, 1));
    auto [losses, grads] = critic_loss_with_grads(critics, batch, targets);
    for (int which = 0; which < 2; ++which) {
      MlpParams& net = which == 0 ? critics.q1 : critics.q2;
      auto eval = [&] {
        const CriticLosses l = critic_loss(critics, batch, targets);
        return which == 0 ? l.j_q1 : l.j_q2;
      };
      composite_max = std::max(
          composite_max,
          probe_params_fd(net.params, grads[static_cast<std::size_t>(which)],
                          eval, pick, 4));
    }
  }
  std::printf("  composite: critic loss (Eq.6/7)      max rel err %.3g\n",
              composite_max);

  // Eq. 8 path: policy loss through the sampled action and min-Q.
  for (int i = 0; i < 100; ++i) {
    Rng net_rng(rng.next_u64());
    SacConfig sac;
    CriticEnsemble critics = CriticEnsemble::init(2, 1, 2, 6, net_rng);
    GaussianPolicyParams policy = GaussianPolicyParams::init({4, 6, 1}, net_rng);
    auto batch = random_rl_batch(rng, 4, 2);
    Tensor noise = rand_t({4, 1}, rng, -1.5, 1.5);
    auto [value, grads] =
        policy_loss_with_grads(sac, critics, policy, batch, noise);
    auto eval = [&] { return policy_loss(sac, critics, policy, batch, noise); };
    composite_max = std::max(
        composite_max, probe_params_fd(policy.params, grads, eval, pick, 6));
  }
  std::printf("  composite: policy loss (Eq.8)        max rel err %.3g\n",
              composite_max);

  if (composite_max >= kGradTol)
    return {false,
            "composite gradients max rel err " + std::to_string(composite_max)};
  return {true, "ops max " + std::to_string(op_stats.max_rel) +
                    ", composites max " + std::to_string(composite_max)};
}

Outcome c2_sac_reduction() {
  RunConfig config = desk_config();
  config.env_name = "goal-reach";
  config.encoder.context_dim = 0;  // encoder disabled
  config.train.total_steps = 5000;
  config.train.warmup_steps = 2000;
  config.train.eval_interval = 2500;
  config.out_dir = work_dir() + "/c2_run";
  std::filesystem::remove_all(config.out_dir);

  auto env1 = make_env(config.env_name, config.env);
  const RunResult full = run_training(config, *env1);
  auto env2 = make_env(config.env_name, config.env);
  const lcsac::testing::PlainSacResult ref =
      lcsac::testing::run_plain_sac(config, *env2);

  if (full.metrics.rl_updates !=
      static_cast<std::int64_t>(ref.updates.size()))
    return {false, "update counts differ"};
  if (full.metrics.rl_updates == 0) return {false, "no updates ran"};

  std::ifstream csv(config.out_dir + "/sac_metrics.csv");
  std::string line;
  std::getline(csv, line);  // header
  std::size_t i = 0;
  std::int64_t mismatches = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // step
    std::array<double, 5> got{};
    for (int f = 0; f < 5; ++f) {
      std::getline(ss, cell, ',');
      got[static_cast<std::size_t>(f)] = std::strtod(cell.c_str(), nullptr);
    }
    const SacUpdateMetrics& want = ref.updates[i];
    if (got[0] != want.j_q1 || got[1] != want.j_q2 || got[2] != want.j_pi ||
        got[3] != want.mean_q || got[4] != want.entropy_estimate)
      ++mismatches;
    ++i;
  }
  if (i != ref.updates.size()) return {false, "csv row count mismatch"};
  if (mismatches > 0)
    return {false, std::to_string(mismatches) + " of " + std::to_string(i) +
                       " updates differ"};

  // Evaluation trajectories agree bitwise too.
  std::vector<std::pair<std::int64_t, double>> evals;
  for (const auto& row : full.metrics.rows)
    if (row.eval_mean) evals.emplace_back(row.step, *row.eval_mean);
  if (evals != ref.eval_means) return {false, "eval tracks differ"};

  return {true, std::to_string(i) + " updates bit-identical over " +
                    std::to_string(config.train.total_steps) + " steps"};
}

Outcome c3_infonce_sanity() {
  Rng rng(33);

  // (a) W = 0 gives exactly log N.
  {
    EncoderConfig cfg{2, 1, 3, 8, ContextMode::kDeterministic};
    EncoderParams enc = EncoderParams::init(cfg, rng);
    for (double& v : enc.params["scorer.W"].values()) v = 0.0;
    SegmentBatch batch = random_segment_batch(rng, 128, 4);
    const double loss = infonce_loss(enc, batch);
    if (std::abs(loss - std::log(128.0)) > 1e-12)
      return {false, "W=0 loss " + std::to_string(loss) + " != log(128)"};
  }

  // (b) Synthetic rotating-point family: e_{t+1} is a deterministic function
  // of the segment (phase and angular velocity are inferable from the
  // history), so the MI bound should climb past 0.5*log(N).
  const std::int64_t n_batch = 128;
  const std::int64_t l = 20;
  ContextBuffer buf(200000, 2, 1);
  Rng data_rng(77);
  for (int episode = 0; episode < 400; ++episode) {
    const double phase0 = data_rng.uniform(0, 2 * M_PI);
    const double omega = data_rng.uniform(0.2, 0.5);
    const int len = 60;
    for (int t = 0; t < len; ++t) {
      Transition tr;
      const double a0 = phase0 + omega * t;
      const double a1 = phase0 + omega * (t + 1);
      tr.s = {std::cos(a0), std::sin(a0)};
      tr.a = {0.0};
      tr.r = 0.0;
      tr.s_next = {std::cos(a1), std::sin(a1)};
      tr.done = t == len - 1;
      buf.push(tr);
    }
  }

  EncoderConfig cfg{2, 1, 4, 32, ContextMode::kDeterministic};
  EncoderParams enc = EncoderParams::init(cfg, rng);
  AdamState opt;
  Rng seg_rng(5);
  const double threshold = 0.5 * std::log(static_cast<double>(n_batch));
  double smoothed = 0.0;
  int updates = 0;
  for (; updates < 2000; ++updates) {
    const SegmentBatch batch = buf.sample_segments(n_batch, l, seg_rng);
    const EncoderUpdateMetrics m =
        encoder_update(enc, opt, batch, 1e-3, 0, 0);
    smoothed = updates == 0 ? m.mi_bound
                            : 0.95 * smoothed + 0.05 * m.mi_bound;
    if (updates >= 20 && smoothed > threshold) break;
  }
  if (smoothed <= threshold)
    return {false, "smoothed MI bound " + std::to_string(smoothed) +
                       " never exceeded " + std::to_string(threshold)};
  return {true, "MI bound " + std::to_string(smoothed) + " > " +
                    std::to_string(threshold) + " after " +
                    std::to_string(updates + 1) + " updates"};
}

Outcome c7_replay_properties() {
  Rng rng(55);

  // (a) 10,000-operation randomized push/sample runs against the list model.
  for (int trial = 0; trial < 4; ++trial) {
    const std::int64_t capacity = 64 + rng.uniform_int(192);
    const std::int64_t l = 4 + rng.uniform_int(6);
    ContextBuffer buf(capacity, 2, 1);
    lcsac::testing::ListModelBuffer model(capacity);
    double tag = 0.0;
    for (int op = 0; op < 10000; ++op) {
      Transition t;
      t.s = {tag, tag + 0.5};
      t.a = {-tag};
      t.r = tag;
      t.s_next = {tag + 1, tag + 1.5};
      t.done = rng.uniform() < 0.06;
      tag += 1.0;
      buf.push(t);
      model.push(t);
      if (buf.size() != model.size()) return {false, "size diverged"};
      if (buf.episode_end_indices() != model.episode_end_indices())
        return {false, "episode-end lists diverged"};
      if (buf.valid_window_count(l) !=
          static_cast<std::int64_t>(model.valid_window_starts(l).size()))
        return {false, "window counts diverged"};
      if (op % 500 == 0 && buf.valid_window_count(l) > 0) {
        const auto starts = model.valid_window_starts(l);
        const std::set<std::int64_t> valid(starts.begin(), starts.end());
        const SegmentBatch sampled = buf.sample_segments(32, l, rng);
        for (std::int64_t src : sampled.source_indices)
          if (valid.count(src) == 0) return {false, "sampled invalid window"};
      }
    }
    // Full content audit at the end of each trial.
    for (std::int64_t g = model.oldest_resident(); g < model.count(); ++g) {
      const Transition got = buf.get(g);
      const Transition& want = model.get(g);
      if (got.s != want.s || got.done != want.done)
        return {false, "contents diverged"};
    }
  }

  // (b) 1e5 sampled segments, zero episode-boundary crossings.
  ContextBuffer buf(4096, 2, 1);
  Rng ep_rng(8);
  double tag = 0.0;
  for (int e = 0; e < 120; ++e) {
    const std::int64_t len = 6 + ep_rng.uniform_int(40);
    for (std::int64_t i = 0; i < len; ++i) {
      Transition t;
      t.s = {tag, 0.0};
      t.a = {0.0};
      t.r = 0;
      t.s_next = {tag + 1, 0.0};
      t.done = i == len - 1;
      buf.push(t);
      tag += 1.0;
    }
  }
  const std::int64_t l = 6;
  std::int64_t crossings = 0;
  std::int64_t segments = 0;
  for (int round = 0; round < 100; ++round) {
    const SegmentBatch batch = buf.sample_segments(1000, l, rng);
    for (const auto& seg : batch.segments) {
      ++segments;
      for (std::size_t j = 0; j + 1 < seg.size(); ++j)
        if (seg[j].done) ++crossings;
    }
  }
  if (crossings != 0)
    return {false, std::to_string(crossings) + " boundary crossings"};
  return {true, "list model exact over 4x10k ops; " +
                    std::to_string(segments) + " segments, 0 crossings"};
}

Outcome c8_determinism() {
  RunConfig config = desk_config();
  config.env_name = "goal-reach";
  config.train.total_steps = 15000;
  config.train.seed = 42;

  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    config.out_dir = work_dir() + "/c8_run" + std::to_string(i);
    std::filesystem::remove_all(config.out_dir);
    auto env = make_env(config.env_name, config.env);
    run_training(config, *env);
    csv[i] = read_file(config.out_dir + "/metrics.csv");
  }
  if (csv[0].empty()) return {false, "no metrics written"};
  if (csv[0] != csv[1]) return {false, "metrics.csv bytes differ"};
  return {true, "two seeded invocations produced identical " +
                    std::to_string(csv[0].size()) + "-byte metrics.csv"};
}

}  // namespace acceptance
