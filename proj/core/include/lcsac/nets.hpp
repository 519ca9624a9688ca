#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lcsac/param_set.hpp"
#include "lcsac/tape.hpp"

namespace lcsac {

class Rng;

/// Batched linear layer: x[n,in] * W[in,out] + b broadcast over rows
/// (broadcast is expressed as ones[n,1] * b[1,out], keeping every shape
/// change an explicit op).
Value linear(Tape& tape, Value x, Value w, Value b);

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

struct MlpConfig {
  std::int64_t input = 0;
  std::int64_t hidden = 256;
  std::int64_t output = 1;
  int hidden_layers = 2;
};

/// Feedforward network: Linear -> ReLU (per hidden layer) -> Linear, final
/// layer unactivated. Parameters live in a ParamSet ("l0.W", "l0.b", ...).
struct MlpParams {
  MlpConfig config;
  ParamSet params;

  /// Uniform +-1/sqrt(fan_in) init for weights and biases.
  static MlpParams init(const MlpConfig& config, Rng& rng);
};

/// Taped forward; `bound` must come from bind_params(tape, mlp.params).
Value mlp_forward(Tape& tape, const MlpParams& mlp, const BoundParams& bound,
                  Value input);

/// Value-only forward on a scratch tape (evaluation paths).
Tensor mlp_eval(const MlpParams& mlp, const Tensor& input);

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

struct LstmConfig {
  std::int64_t input = 0;
  std::int64_t hidden = 128;
};

/// Single-layer LSTM cell. Gates are stored fused in (i, f, g, o) column
/// order: "Wx" [in,4H], "Wh" [H,4H], "b" [1,4H]. The forget-gate bias block
/// is initialized to +1.
struct LstmParams {
  LstmConfig config;
  ParamSet params;

  static LstmParams init(const LstmConfig& config, Rng& rng);
};

struct LstmState {
  Value h;
  Value c;
};

/// One LSTM step on the tape: returns (h', c'); the step output is h'.
/// Standard gate equations: sigmoid input/forget/output gates, tanh cell
/// candidate and output squash.
LstmState lstm_step(Tape& tape, const LstmParams& lstm,
                    const BoundParams& bound, Value input, LstmState prev);

/// Zero initial state for a batch of `rows` sequences.
LstmState lstm_zero_state(Tape& tape, const LstmConfig& config,
                          std::int64_t rows);

// ---------------------------------------------------------------------------
// Tanh-squashed diagonal-Gaussian policy
// ---------------------------------------------------------------------------

struct PolicyConfig {
  std::int64_t input = 0;      // state dim + context dim
  std::int64_t hidden = 256;
  std::int64_t action_dim = 0;
  double logstd_min = -20.0;
  double logstd_max = 2.0;
  double tanh_eps = 1e-6;  // floor inside the squash log-det correction
};

/// Two ReLU hidden layers, then separate mean and log-std linear heads.
/// Log-std is clamped to [logstd_min, logstd_max] before exponentiation.
struct GaussianPolicyParams {
  PolicyConfig config;
  ParamSet params;

  static GaussianPolicyParams init(const PolicyConfig& config, Rng& rng);
};

struct PolicySample {
  Value action;    // [n, A], strictly inside (-1, 1)
  Value log_prob;  // [n, 1]
  Value mean;      // [n, A], pre-squash
  Value log_std;   // [n, A], clamped
};

/// Reparameterized sample: u = mean + std * noise, action = tanh(u);
/// log_prob is the diagonal-Gaussian log-density at u minus the tanh
/// log-det correction sum(log(1 - action^2 + eps)). `noise` must be a
/// constant [n, A] tensor of standard normals.
PolicySample policy_sample(Tape& tape, const GaussianPolicyParams& policy,
                           const BoundParams& bound, Value input, Value noise);

/// Deterministic action tanh(mean) for evaluation; no sampling, no tape
/// retained.
Tensor policy_mean_action(const GaussianPolicyParams& policy,
                          const Tensor& input);

/// Convenience for rollout: sample a single action (input [1, dim]) on a
/// scratch tape; returns the action row and its log-probability.
std::pair<Tensor, double> policy_sample_eval(
    const GaussianPolicyParams& policy, const Tensor& input,
    const Tensor& noise);

/// Allocation-light single-row forward passes for the rollout loop. These
/// reproduce the taped arithmetic exactly (same accumulation order).
std::vector<double> policy_act(const GaussianPolicyParams& policy,
                               std::span<const double> input,
                               std::span<const double> noise);
std::vector<double> policy_act_mean(const GaussianPolicyParams& policy,
                                    std::span<const double> input);

}  // namespace lcsac
