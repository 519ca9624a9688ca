#include "lcsac/nets.hpp"

#include <cmath>
#include <string>

#include "lcsac/errors.hpp"
#include "lcsac/rng.hpp"

namespace lcsac {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

Tensor uniform_fanin(std::vector<std::int64_t> shape, std::int64_t fan_in,
                     Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), rng, -bound, bound);
}

void check_input_width(const char* what, const Tensor& input,
                       std::int64_t expected) {
  if (input.rank() != 2 || input.shape()[1] != expected)
    throw DimensionError(std::string(what) + ": expected input [n x " +
                         std::to_string(expected) + "], got " +
                         input.shape_str());
}

}  // namespace

Value linear(Tape& tape, Value x, Value w, Value b) {
  const std::int64_t n = tape.value(x).shape()[0];
  Value ones = tape.constant(Tensor::full({n, 1}, 1.0));
  return tape.add(tape.matmul(x, w), tape.matmul(ones, b));
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

MlpParams MlpParams::init(const MlpConfig& config, Rng& rng) {
  if (config.input <= 0 || config.hidden <= 0 || config.output <= 0 ||
      config.hidden_layers < 1)
    throw ConfigError("mlp: dimensions must be positive");
  MlpParams mlp;
  mlp.config = config;
  std::int64_t in = config.input;
  for (int i = 0; i < config.hidden_layers; ++i) {
    const std::string prefix = "l" + std::to_string(i);
    mlp.params.add(prefix + ".W", uniform_fanin({in, config.hidden}, in, rng));
    mlp.params.add(prefix + ".b", uniform_fanin({1, config.hidden}, in, rng));
    in = config.hidden;
  }
  const std::string prefix = "l" + std::to_string(config.hidden_layers);
  mlp.params.add(prefix + ".W", uniform_fanin({in, config.output}, in, rng));
  mlp.params.add(prefix + ".b", uniform_fanin({1, config.output}, in, rng));
  return mlp;
}

Value mlp_forward(Tape& tape, const MlpParams& mlp, const BoundParams& bound,
                  Value input) {
  check_input_width("mlp_forward", tape.value(input), mlp.config.input);
  Value h = input;
  for (int i = 0; i < mlp.config.hidden_layers; ++i) {
    Value w{bound.leaf_ids[2 * i]};
    Value b{bound.leaf_ids[2 * i + 1]};
    h = tape.relu(linear(tape, h, w, b));
  }
  Value w{bound.leaf_ids[2 * mlp.config.hidden_layers]};
  Value b{bound.leaf_ids[2 * mlp.config.hidden_layers + 1]};
  return linear(tape, h, w, b);
}

Tensor mlp_eval(const MlpParams& mlp, const Tensor& input) {
  Tape tape;
  BoundParams bound = bind_params(tape, mlp.params);
  return tape.value(mlp_forward(tape, mlp, bound, tape.constant(input)));
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LstmParams LstmParams::init(const LstmConfig& config, Rng& rng) {
  if (config.input <= 0 || config.hidden <= 0)
    throw ConfigError("lstm: dimensions must be positive");
  LstmParams lstm;
  lstm.config = config;
  const std::int64_t h = config.hidden;
  lstm.params.add("Wx", uniform_fanin({config.input, 4 * h}, config.input, rng));
  lstm.params.add("Wh", uniform_fanin({h, 4 * h}, h, rng));
  Tensor b = uniform_fanin({1, 4 * h}, h, rng);
  for (std::int64_t j = h; j < 2 * h; ++j) b.at(j) += 1.0;  // forget gate
  lstm.params.add("b", std::move(b));
  return lstm;
}

LstmState lstm_step(Tape& tape, const LstmParams& lstm,
                    const BoundParams& bound, Value input, LstmState prev) {
  const std::int64_t h = lstm.config.hidden;
  check_input_width("lstm_step", tape.value(input), lstm.config.input);
  check_input_width("lstm_step(hidden)", tape.value(prev.h), h);

  Value wx{bound.leaf_ids[0]};
  Value wh{bound.leaf_ids[1]};
  Value b{bound.leaf_ids[2]};

  const std::int64_t n = tape.value(input).shape()[0];
  Value ones = tape.constant(Tensor::full({n, 1}, 1.0));
  Value pre = tape.add(tape.add(tape.matmul(input, wx), tape.matmul(prev.h, wh)),
                       tape.matmul(ones, b));

  Value gate_i = tape.sigmoid(tape.slice_cols(pre, 0, h));
  Value gate_f = tape.sigmoid(tape.slice_cols(pre, h, 2 * h));
  Value cand = tape.tanh(tape.slice_cols(pre, 2 * h, 3 * h));
  Value gate_o = tape.sigmoid(tape.slice_cols(pre, 3 * h, 4 * h));

  Value c_next = tape.add(tape.mul(gate_f, prev.c), tape.mul(gate_i, cand));
  Value h_next = tape.mul(gate_o, tape.tanh(c_next));
  return {h_next, c_next};
}

LstmState lstm_zero_state(Tape& tape, const LstmConfig& config,
                          std::int64_t rows) {
  return {tape.constant(Tensor::zeros({rows, config.hidden})),
          tape.constant(Tensor::zeros({rows, config.hidden}))};
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

GaussianPolicyParams GaussianPolicyParams::init(const PolicyConfig& config,
                                                Rng& rng) {
  if (config.input <= 0 || config.hidden <= 0 || config.action_dim <= 0)
    throw ConfigError("policy: dimensions must be positive");
  GaussianPolicyParams policy;
  policy.config = config;
  std::int64_t in = config.input;
  for (int i = 0; i < 2; ++i) {
    const std::string prefix = "trunk.l" + std::to_string(i);
    policy.params.add(prefix + ".W",
                      uniform_fanin({in, config.hidden}, in, rng));
    policy.params.add(prefix + ".b",
                      uniform_fanin({1, config.hidden}, in, rng));
    in = config.hidden;
  }
  policy.params.add("mean.W",
                    uniform_fanin({in, config.action_dim}, in, rng));
  policy.params.add("mean.b", uniform_fanin({1, config.action_dim}, in, rng));
  policy.params.add("logstd.W",
                    uniform_fanin({in, config.action_dim}, in, rng));
  policy.params.add("logstd.b",
                    uniform_fanin({1, config.action_dim}, in, rng));
  return policy;
}

namespace {

struct PolicyHeads {
  Value mean;
  Value log_std;
};

PolicyHeads policy_trunk(Tape& tape, const GaussianPolicyParams& policy,
                         const BoundParams& bound, Value input) {
  check_input_width("policy", tape.value(input), policy.config.input);
  Value h = input;
  for (int i = 0; i < 2; ++i) {
    Value w{bound.leaf_ids[2 * i]};
    Value b{bound.leaf_ids[2 * i + 1]};
    h = tape.relu(linear(tape, h, w, b));
  }
  Value mean = linear(tape, h, Value{bound.leaf_ids[4]},
                      Value{bound.leaf_ids[5]});
  Value log_std_raw = linear(tape, h, Value{bound.leaf_ids[6]},
                             Value{bound.leaf_ids[7]});
  Value log_std = tape.clamp(log_std_raw, policy.config.logstd_min,
                             policy.config.logstd_max);
  return {mean, log_std};
}

}  // namespace

PolicySample policy_sample(Tape& tape, const GaussianPolicyParams& policy,
                           const BoundParams& bound, Value input,
                           Value noise) {
  const Tensor& nz = tape.value(noise);
  if (nz.rank() != 2 || nz.shape()[1] != policy.config.action_dim)
    throw DimensionError("policy_sample: noise shape " + nz.shape_str() +
                         " does not match action dim " +
                         std::to_string(policy.config.action_dim));
  PolicyHeads heads = policy_trunk(tape, policy, bound, input);

  Value std_dev = tape.exp(heads.log_std);
  Value u = tape.add(heads.mean, tape.mul(std_dev, noise));
  Value action = tape.tanh(u);

  // Diagonal-Gaussian log-density at u with u = mean + std*noise reduces to
  // sum(-0.5*noise^2 - log_std) - 0.5*A*log(2*pi).
  Value gauss_terms =
      tape.sub(tape.scale(tape.mul(noise, noise), -0.5), heads.log_std);
  Value gauss_lp = tape.add_const(
      tape.row_sum(gauss_terms),
      -0.5 * static_cast<double>(policy.config.action_dim) * kLogTwoPi);

  // Squash correction: sum over dims of log(1 - tanh(u)^2 + eps).
  Value correction = tape.row_sum(tape.log(tape.add_const(
      tape.negate(tape.mul(action, action)), 1.0 + policy.config.tanh_eps)));

  Value log_prob = tape.sub(gauss_lp, correction);
  tape.value(action).require_finite("policy_sample action");
  tape.value(log_prob).require_finite("policy_sample log_prob");
  return {action, log_prob, heads.mean, heads.log_std};
}

Tensor policy_mean_action(const GaussianPolicyParams& policy,
                          const Tensor& input) {
  Tape tape;
  BoundParams bound = bind_params(tape, policy.params);
  PolicyHeads heads = policy_trunk(tape, policy, bound, tape.constant(input));
  return tape.value(tape.tanh(heads.mean));
}

std::pair<Tensor, double> policy_sample_eval(
    const GaussianPolicyParams& policy, const Tensor& input,
    const Tensor& noise) {
  Tape tape;
  BoundParams bound = bind_params(tape, policy.params);
  Tensor noise_row = noise.rank() == 2
                         ? noise
                         : Tensor::matrix(1, noise.numel(), noise.values());
  PolicySample sample = policy_sample(tape, policy, bound,
                                      tape.constant(input),
                                      tape.constant(std::move(noise_row)));
  return {tape.value(sample.action), tape.value(sample.log_prob).at(0)};
}

namespace {

// Single-row linear matching the tape's matmul accumulation order (k
// ascending, zero inputs skipped).
void linear_row(const Tensor& w, const Tensor& b, const double* x,
                double* out) {
  const std::int64_t in = w.shape()[0];
  const std::int64_t width = w.shape()[1];
  std::fill(out, out + width, 0.0);
  for (std::int64_t k = 0; k < in; ++k) {
    const double xv = x[k];
    if (xv == 0.0) continue;
    const double* wrow = w.data() + k * width;
    for (std::int64_t j = 0; j < width; ++j) out[j] += xv * wrow[j];
  }
  for (std::int64_t j = 0; j < width; ++j) out[j] += b.at(0, j);
}

double clamp_like_tape(double x, double lo, double hi) {
  const double r1 = std::max(0.0, x - lo);
  const double r2 = std::max(0.0, (hi - lo) - r1);
  return hi - r2;
}

struct PolicyRowHeads {
  std::vector<double> mean;
  std::vector<double> log_std;
};

PolicyRowHeads policy_row_heads(const GaussianPolicyParams& policy,
                                std::span<const double> input) {
  const PolicyConfig& cfg = policy.config;
  if (static_cast<std::int64_t>(input.size()) != cfg.input)
    throw DimensionError("policy_act: expected input width " +
                         std::to_string(cfg.input) + ", got " +
                         std::to_string(input.size()));
  std::vector<double> h(input.begin(), input.end());
  std::vector<double> next(static_cast<std::size_t>(cfg.hidden));
  for (int layer = 0; layer < 2; ++layer) {
    const std::string p = "trunk.l" + std::to_string(layer);
    linear_row(policy.params[p + ".W"], policy.params[p + ".b"], h.data(),
               next.data());
    for (double& v : next) v = v > 0.0 ? v : 0.0;
    h = next;
  }
  PolicyRowHeads heads;
  heads.mean.resize(static_cast<std::size_t>(cfg.action_dim));
  heads.log_std.resize(static_cast<std::size_t>(cfg.action_dim));
  linear_row(policy.params["mean.W"], policy.params["mean.b"], h.data(),
             heads.mean.data());
  linear_row(policy.params["logstd.W"], policy.params["logstd.b"], h.data(),
             heads.log_std.data());
  for (double& v : heads.log_std)
    v = clamp_like_tape(v, cfg.logstd_min, cfg.logstd_max);
  return heads;
}

}  // namespace

std::vector<double> policy_act(const GaussianPolicyParams& policy,
                               std::span<const double> input,
                               std::span<const double> noise) {
  if (static_cast<std::int64_t>(noise.size()) != policy.config.action_dim)
    throw DimensionError("policy_act: noise width mismatch");
  PolicyRowHeads heads = policy_row_heads(policy, input);
  std::vector<double> action(heads.mean.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double u = heads.mean[i] + std::exp(heads.log_std[i]) * noise[i];
    action[i] = std::tanh(u);
    if (!std::isfinite(action[i]))
      throw NumericError("non-finite value in policy_act action");
  }
  return action;
}

std::vector<double> policy_act_mean(const GaussianPolicyParams& policy,
                                    std::span<const double> input) {
  PolicyRowHeads heads = policy_row_heads(policy, input);
  std::vector<double> action(heads.mean.size());
  for (std::size_t i = 0; i < action.size(); ++i)
    action[i] = std::tanh(heads.mean[i]);
  return action;
}

}  // namespace lcsac
