#include "lcsac/sac.hpp"

#include <algorithm>
#include <cmath>

#include "lcsac/errors.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/tape.hpp"

namespace lcsac {

void SacConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0)
    throw ConfigError("sac.gamma must be in [0, 1]");
  if (tau <= 0.0 || tau > 1.0) throw ConfigError("sac.tau must be in (0, 1]");
  if (alpha < 0.0) throw ConfigError("sac.alpha must be >= 0");
  if (lr <= 0.0) throw ConfigError("sac.lr must be > 0");
  if (batch < 1) throw ConfigError("sac.batch must be >= 1");
}

CriticEnsemble CriticEnsemble::init(std::int64_t s_dim, std::int64_t a_dim,
                                    std::int64_t c_dim, std::int64_t hidden,
                                    Rng& rng) {
  const MlpConfig cfg{s_dim + a_dim + c_dim, hidden, 1, 2};
  CriticEnsemble ens;
  ens.q1 = MlpParams::init(cfg, rng);
  ens.q2 = MlpParams::init(cfg, rng);
  // Targets start as exact copies of the online networks.
  ens.target_q1 = ens.q1;
  ens.target_q2 = ens.q2;
  return ens;
}

namespace {

Tensor pack_rows(const std::vector<RlTuple>& batch,
                 const std::vector<const std::vector<double> RlTuple::*>& fields) {
  const auto n = static_cast<std::int64_t>(batch.size());
  std::int64_t width = 0;
  for (auto f : fields) width += static_cast<std::int64_t>((batch[0].*f).size());
  Tensor out = Tensor::zeros({n, width});
  for (std::int64_t i = 0; i < n; ++i) {
    double* row = out.data() + i * width;
    for (auto f : fields) {
      const auto& v = batch[static_cast<std::size_t>(i)].*f;
      row = std::copy(v.begin(), v.end(), row);
    }
  }
  return out;
}

}  // namespace

Tensor pack_policy_input(const std::vector<RlTuple>& batch, bool next_step) {
  if (next_step) return pack_rows(batch, {&RlTuple::s_next, &RlTuple::c_next});
  return pack_rows(batch, {&RlTuple::s, &RlTuple::c});
}

Tensor pack_critic_input(const std::vector<RlTuple>& batch) {
  return pack_rows(batch, {&RlTuple::s, &RlTuple::a, &RlTuple::c});
}

Tensor pack_actions(const std::vector<RlTuple>& batch) {
  return pack_rows(batch, {&RlTuple::a});
}

std::vector<double> q_target(const SacConfig& config,
                             const CriticEnsemble& critics,
                             const GaussianPolicyParams& policy,
                             const std::vector<RlTuple>& batch,
                             const Tensor& noise) {
  if (batch.empty()) throw ContractError("q_target: batch must be nonempty");
  const auto n = static_cast<std::int64_t>(batch.size());

  // a' ~ pi(.|s', c') with log-prob, on a throwaway tape.
  Tape tape;
  BoundParams policy_bound = bind_params(tape, policy.params);
  PolicySample next = policy_sample(tape, policy, policy_bound,
                                    tape.constant(pack_policy_input(batch, true)),
                                    tape.constant(noise));
  const Tensor& a_next = tape.value(next.action);
  const Tensor& lp = tape.value(next.log_prob);

  // min(Qbar1, Qbar2)(s', a', c').
  const std::int64_t s_dim = static_cast<std::int64_t>(batch[0].s.size());
  const std::int64_t a_dim = static_cast<std::int64_t>(batch[0].a.size());
  const std::int64_t c_dim = static_cast<std::int64_t>(batch[0].c.size());
  Tensor q_in = Tensor::zeros({n, s_dim + a_dim + c_dim});
  for (std::int64_t i = 0; i < n; ++i) {
    const RlTuple& t = batch[static_cast<std::size_t>(i)];
    double* row = q_in.data() + i * (s_dim + a_dim + c_dim);
    row = std::copy(t.s_next.begin(), t.s_next.end(), row);
    row = std::copy_n(a_next.data() + i * a_dim, a_dim, row);
    std::copy(t.c_next.begin(), t.c_next.end(), row);
  }
  const Tensor qb1 = mlp_eval(critics.target_q1, q_in);
  const Tensor qb2 = mlp_eval(critics.target_q2, q_in);

  std::vector<double> targets(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const RlTuple& t = batch[static_cast<std::size_t>(i)];
    const double bootstrap =
        std::min(qb1.at(i), qb2.at(i)) - config.alpha * lp.at(i);
    targets[static_cast<std::size_t>(i)] =
        t.r + config.gamma * (t.done ? 0.0 : 1.0) * bootstrap;
  }
  return targets;
}

CriticLosses critic_loss(const CriticEnsemble& critics,
                         const std::vector<RlTuple>& batch,
                         const std::vector<double>& targets) {
  if (batch.size() != targets.size())
    throw DimensionError("critic_loss: batch size " +
                         std::to_string(batch.size()) +
                         " does not match target count " +
                         std::to_string(targets.size()));
  const Tensor q_in = pack_critic_input(batch);
  const Tensor q1 = mlp_eval(critics.q1, q_in);
  const Tensor q2 = mlp_eval(critics.q2, q_in);
  CriticLosses losses;
  const auto n = static_cast<std::int64_t>(batch.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = targets[static_cast<std::size_t>(i)];
    losses.j_q1 += 0.5 * (q1.at(i) - t) * (q1.at(i) - t);
    losses.j_q2 += 0.5 * (q2.at(i) - t) * (q2.at(i) - t);
  }
  losses.j_q1 /= static_cast<double>(n);
  losses.j_q2 /= static_cast<double>(n);
  return losses;
}

double policy_loss(const SacConfig& config, const CriticEnsemble& critics,
                   const GaussianPolicyParams& policy,
                   const std::vector<RlTuple>& batch, const Tensor& noise) {
  if (batch.empty()) throw ContractError("policy_loss: batch must be nonempty");
  Tape tape;
  BoundParams policy_bound = bind_params(tape, policy.params);
  Value s_c = tape.constant(pack_policy_input(batch, false));
  PolicySample sample =
      policy_sample(tape, policy, policy_bound, s_c, tape.constant(noise));

  const std::int64_t s_dim = static_cast<std::int64_t>(batch[0].s.size());
  Value s_only = tape.slice_cols(s_c, 0, s_dim);
  Value c_only =
      static_cast<std::int64_t>(batch[0].c.size()) > 0
          ? tape.slice_cols(s_c, s_dim,
                            s_dim + static_cast<std::int64_t>(batch[0].c.size()))
          : Value{};
  Value q_in = tape.concat_cols(s_only, sample.action);
  if (c_only.valid()) q_in = tape.concat_cols(q_in, c_only);

  BoundParams q1_bound = bind_params_const(tape, critics.q1.params);
  BoundParams q2_bound = bind_params_const(tape, critics.q2.params);
  Value q1 = mlp_forward(tape, critics.q1, q1_bound, q_in);
  Value q2 = mlp_forward(tape, critics.q2, q2_bound, q_in);
  Value min_q = tape.minimum(q1, q2);
  Value loss =
      tape.mean(tape.sub(tape.scale(sample.log_prob, config.alpha), min_q));
  return tape.value(loss).at(0);
}

std::pair<CriticLosses, std::array<std::vector<Tensor>, 2>>
critic_loss_with_grads(const CriticEnsemble& critics,
                       const std::vector<RlTuple>& batch,
                       const std::vector<double>& targets) {
  const auto n = static_cast<std::int64_t>(batch.size());
  Tape tape;
  Value q_in = tape.constant(pack_critic_input(batch));
  Value target =
      tape.constant(Tensor::matrix(n, 1, std::vector<double>(targets)));
  BoundParams q1_bound = bind_params(tape, critics.q1.params);
  BoundParams q2_bound = bind_params(tape, critics.q2.params);
  Value j1 = tape.scale(
      tape.mean(tape.squared_diff(
          mlp_forward(tape, critics.q1, q1_bound, q_in), target)),
      0.5);
  Value j2 = tape.scale(
      tape.mean(tape.squared_diff(
          mlp_forward(tape, critics.q2, q2_bound, q_in), target)),
      0.5);
  Gradients grads = tape.backward(tape.add(j1, j2));
  std::array<std::vector<Tensor>, 2> gs;
  for (int id : q1_bound.leaf_ids) gs[0].push_back(grads.get(Value{id}));
  for (int id : q2_bound.leaf_ids) gs[1].push_back(grads.get(Value{id}));
  return {{tape.value(j1).at(0), tape.value(j2).at(0)}, std::move(gs)};
}

std::pair<double, std::vector<Tensor>> policy_loss_with_grads(
    const SacConfig& config, const CriticEnsemble& critics,
    const GaussianPolicyParams& policy, const std::vector<RlTuple>& batch,
    const Tensor& noise) {
  Tape tape;
  BoundParams policy_bound = bind_params(tape, policy.params);
  Value s_c = tape.constant(pack_policy_input(batch, false));
  PolicySample sample =
      policy_sample(tape, policy, policy_bound, s_c, tape.constant(noise));

  const std::int64_t s_dim = static_cast<std::int64_t>(batch[0].s.size());
  const std::int64_t c_dim = static_cast<std::int64_t>(batch[0].c.size());
  Value q_in = tape.concat_cols(tape.slice_cols(s_c, 0, s_dim), sample.action);
  if (c_dim > 0)
    q_in = tape.concat_cols(q_in, tape.slice_cols(s_c, s_dim, s_dim + c_dim));
  BoundParams q1_bound = bind_params_const(tape, critics.q1.params);
  BoundParams q2_bound = bind_params_const(tape, critics.q2.params);
  Value min_q = tape.minimum(mlp_forward(tape, critics.q1, q1_bound, q_in),
                             mlp_forward(tape, critics.q2, q2_bound, q_in));
  Value loss =
      tape.mean(tape.sub(tape.scale(sample.log_prob, config.alpha), min_q));
  Gradients grads = tape.backward(loss);
  std::vector<Tensor> gs;
  for (int id : policy_bound.leaf_ids) gs.push_back(grads.get(Value{id}));
  return {tape.value(loss).at(0), std::move(gs)};
}

namespace {

struct CriticStep {
  double j_q1, j_q2, mean_q;
};

CriticStep critic_update(const SacConfig& config, CriticEnsemble& critics,
                         const std::vector<RlTuple>& batch,
                         const std::vector<double>& targets) {
  const auto n = static_cast<std::int64_t>(batch.size());
  Tape tape;
  Value q_in = tape.constant(pack_critic_input(batch));
  Value target =
      tape.constant(Tensor::matrix(n, 1, std::vector<double>(targets)));

  BoundParams q1_bound = bind_params(tape, critics.q1.params);
  BoundParams q2_bound = bind_params(tape, critics.q2.params);
  Value q1 = mlp_forward(tape, critics.q1, q1_bound, q_in);
  Value q2 = mlp_forward(tape, critics.q2, q2_bound, q_in);
  Value j1 = tape.scale(tape.mean(tape.squared_diff(q1, target)), 0.5);
  Value j2 = tape.scale(tape.mean(tape.squared_diff(q2, target)), 0.5);
  Value total = tape.add(j1, j2);

  Gradients grads = tape.backward(total);
  std::vector<Tensor> g1, g2;
  for (int id : q1_bound.leaf_ids) g1.push_back(grads.get(Value{id}));
  for (int id : q2_bound.leaf_ids) g2.push_back(grads.get(Value{id}));
  sgd_adam_step(critics.q1.params, g1, critics.q1_opt, config.lr);
  sgd_adam_step(critics.q2.params, g2, critics.q2_opt, config.lr);

  double mean_q = 0.0;
  const Tensor& v1 = tape.value(q1);
  const Tensor& v2 = tape.value(q2);
  for (std::int64_t i = 0; i < n; ++i)
    mean_q += std::min(v1.at(i), v2.at(i));
  return {tape.value(j1).at(0), tape.value(j2).at(0),
          mean_q / static_cast<double>(n)};
}

struct PolicyStep {
  double j_pi, entropy;
};

PolicyStep policy_update(const SacConfig& config, CriticEnsemble& critics,
                         GaussianPolicyParams& policy, AdamState& policy_opt,
                         const std::vector<RlTuple>& batch,
                         const Tensor& noise) {
  Tape tape;
  BoundParams policy_bound = bind_params(tape, policy.params);
  Value s_c = tape.constant(pack_policy_input(batch, false));
  PolicySample sample =
      policy_sample(tape, policy, policy_bound, s_c, tape.constant(noise));

  const std::int64_t s_dim = static_cast<std::int64_t>(batch[0].s.size());
  const std::int64_t c_dim = static_cast<std::int64_t>(batch[0].c.size());
  Value q_in = tape.concat_cols(tape.slice_cols(s_c, 0, s_dim), sample.action);
  if (c_dim > 0)
    q_in = tape.concat_cols(q_in, tape.slice_cols(s_c, s_dim, s_dim + c_dim));

  // Critic parameters enter as constants: no gradient reaches them.
  BoundParams q1_bound = bind_params_const(tape, critics.q1.params);
  BoundParams q2_bound = bind_params_const(tape, critics.q2.params);
  Value min_q = tape.minimum(mlp_forward(tape, critics.q1, q1_bound, q_in),
                             mlp_forward(tape, critics.q2, q2_bound, q_in));
  Value loss =
      tape.mean(tape.sub(tape.scale(sample.log_prob, config.alpha), min_q));

  Gradients grads = tape.backward(loss);
  std::vector<Tensor> g;
  for (int id : policy_bound.leaf_ids) g.push_back(grads.get(Value{id}));
  sgd_adam_step(policy.params, g, policy_opt, config.lr);

  double mean_lp = 0.0;
  const Tensor& lp = tape.value(sample.log_prob);
  for (std::int64_t i = 0; i < lp.numel(); ++i) mean_lp += lp.at(i);
  mean_lp /= static_cast<double>(lp.numel());
  return {tape.value(loss).at(0), -mean_lp};
}

}  // namespace

SacUpdateMetrics sac_update_on_batch(const SacConfig& config,
                                     CriticEnsemble& critics,
                                     GaussianPolicyParams& policy,
                                     AdamState& policy_opt,
                                     const std::vector<RlTuple>& batch,
                                     Rng& noise_rng) {
  const auto n = static_cast<std::int64_t>(batch.size());
  const std::int64_t a_dim = static_cast<std::int64_t>(batch[0].a.size());

  Tensor target_noise = Tensor::zeros({n, a_dim});
  for (double& v : target_noise.values()) v = noise_rng.normal();
  const std::vector<double> targets =
      q_target(config, critics, policy, batch, target_noise);

  const CriticStep cs = critic_update(config, critics, batch, targets);

  Tensor policy_noise = Tensor::zeros({n, a_dim});
  for (double& v : policy_noise.values()) v = noise_rng.normal();
  const PolicyStep ps =
      policy_update(config, critics, policy, policy_opt, batch, policy_noise);

  polyak_update(critics.target_q1.params, critics.q1.params, config.tau);
  polyak_update(critics.target_q2.params, critics.q2.params, config.tau);

  return {cs.j_q1, cs.j_q2, ps.j_pi, cs.mean_q, ps.entropy};
}

std::optional<SacUpdateMetrics> sac_update(const SacConfig& config,
                                           CriticEnsemble& critics,
                                           GaussianPolicyParams& policy,
                                           AdamState& policy_opt,
                                           const RlBuffer& buffer,
                                           Rng& batch_rng, Rng& noise_rng) {
  if (buffer.size() == 0) return std::nullopt;
  const auto batch = buffer.sample(config.batch, batch_rng);
  return sac_update_on_batch(config, critics, policy, policy_opt, batch,
                             noise_rng);
}

}  // namespace lcsac
