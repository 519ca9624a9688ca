#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lcsac/nets.hpp"
#include "lcsac/param_set.hpp"
#include "lcsac/replay.hpp"
#include "lcsac/sac_types.hpp"
#include "lcsac/tape.hpp"

namespace lcsac {

class Rng;

/// How the latent context is represented.
enum class ContextMode { kDeterministic, kProbabilistic };

/// What the scorer treats as the next-step observation e: the full
/// (s', a', r') concatenation or the next state alone.
enum class TransitionEncoding { kSar, kStateOnly };

struct EncoderConfig {
  std::int64_t s_dim = 0;
  std::int64_t a_dim = 0;
  std::int64_t context_dim = 5;
  std::int64_t hidden = 128;  // input-linear width and LSTM width
  ContextMode mode = ContextMode::kDeterministic;
  TransitionEncoding e_mode = TransitionEncoding::kSar;
  double logstd_min = -20.0;
  double logstd_max = 2.0;

  std::int64_t input_dim() const { return s_dim + a_dim + 1; }
  std::int64_t e_dim() const {
    return e_mode == TransitionEncoding::kSar ? s_dim + a_dim + 1 : s_dim;
  }
};

/// Latent context: deterministic value, or mean/log-std with a sampled value
/// in probabilistic mode.
struct ContextVariable {
  std::vector<double> mean;
  std::vector<double> log_std;  // empty in deterministic mode
  std::vector<double> value;    // = mean until sample() in probabilistic mode

  bool probabilistic() const { return !log_std.empty(); }
  /// Reparameterized draw: value = mean + exp(log_std) * xi.
  void sample(Rng& rng);
};

/// Recurrent context encoder: input linear (-> ReLU) -> LSTM -> mean head
/// (+ log-std head in probabilistic mode), plus the bilinear scorer matrix W
/// used by the contrastive loss. All parameters live in one ParamSet.
struct EncoderParams {
  EncoderConfig config;
  ParamSet params;

  static EncoderParams init(const EncoderConfig& config, Rng& rng);

  LstmConfig lstm_config() const { return {config.hidden, config.hidden}; }
  /// Leaf-id view of the LSTM block within a full binding of `params`.
  static BoundParams lstm_bound(const BoundParams& full);
};

/// Streaming encoder state for one episode: consumes (s, a, r) triples and
/// yields the context conditioned on everything seen since the last reset.
/// The hidden state is reset at every episode start.
class EncoderStream {
 public:
  explicit EncoderStream(const EncoderParams& params);

  void reset();
  /// Context for the first policy step of an episode (no triple seen yet):
  /// the zero vector.
  ContextVariable initial_context() const;
  /// Advances one step and returns c_t given e_{1:t}.
  ContextVariable step(std::span<const double> s, std::span<const double> a,
                       double r);
  std::int64_t steps_in_episode() const { return step_count_; }

 private:
  const EncoderParams* params_;
  std::vector<double> h_;
  std::vector<double> cell_;
  std::int64_t step_count_ = 0;
};

/// Encodes a contiguous within-episode segment from a fresh zero hidden
/// state; returns contexts c_1..c_l. Value-only (no gradients).
std::vector<ContextVariable> encode_segment(
    const EncoderParams& params, const std::vector<Transition>& segment);

/// InfoNCE loss for hand-set matrices: contexts [N,d], positives [N,e],
/// scorer [e,d]; score(e_j, c_i) = e_j . W . c_i, softmax cross-entropy with
/// the positive on the diagonal. Exposed for oracle tests and diagnostics.
double infonce_loss_given(const Tensor& contexts, const Tensor& positives,
                          const Tensor& scorer);

/// InfoNCE loss through the full encoder path. Probabilistic mode samples
/// contexts via reparameterization from `rng` (required in that mode).
double infonce_loss(const EncoderParams& params, const SegmentBatch& batch,
                    Rng* rng = nullptr);

/// Mutual-information lower bound log(n) - loss.
double mi_lower_bound(double loss, std::int64_t n);

/// Mean closed-form KL(N(mu, diag sigma^2) || N(0, I)) over probabilistic
/// contexts. ContractError if any context is deterministic.
double kl_regularizer(const std::vector<ContextVariable>& contexts);

/// Networks needed when the critic-loss term (beta1 > 0) joins the encoder
/// objective; gradients flow into the encoder through the context inputs of
/// the Q networks, while critic/policy parameters stay fixed.
struct CriticTermInputs {
  const SacConfig* sac = nullptr;
  const struct CriticEnsemble* critics = nullptr;
  const GaussianPolicyParams* policy = nullptr;
  /// Bootstrap targets are gradient-blocked by contract; supplying them here
  /// (one per segment) makes the objective a pure function of the encoder
  /// parameters, which is what finite-difference checks differentiate.
  const std::vector<double>* frozen_targets = nullptr;
};

/// Composite objective value J_q = L_CP + beta1 * L_critic + beta2 * KL.
/// beta1 > 0 requires `critic_term`; beta2 only applies in probabilistic
/// mode.
double encoder_objective(const EncoderParams& params, const SegmentBatch& batch,
                         double beta1, double beta2,
                         const CriticTermInputs* critic_term = nullptr,
                         Rng* rng = nullptr);

/// Objective value plus its gradient for every encoder parameter (aligned
/// with params order). Diagnostic surface backing the finite-difference
/// verification of the full Eq-4/Eq-5 paths.
std::pair<double, std::vector<Tensor>> encoder_objective_with_grads(
    const EncoderParams& params, const SegmentBatch& batch, double beta1,
    double beta2, const CriticTermInputs* critic_term = nullptr,
    Rng* rng = nullptr);

struct EncoderUpdateMetrics {
  double loss_cp = 0.0;
  double kl = 0.0;
  double mi_bound = 0.0;
  double objective = 0.0;
};

/// One gradient step on the encoder parameters (including the scorer W).
EncoderUpdateMetrics encoder_update(EncoderParams& params, AdamState& state,
                                    const SegmentBatch& batch, double lr,
                                    double beta1, double beta2,
                                    const CriticTermInputs* critic_term =
                                        nullptr,
                                    Rng* rng = nullptr);

}  // namespace lcsac
