#pragma once

#include <array>
#include <optional>
#include <vector>

#include "lcsac/replay.hpp"
#include "lcsac/sac_types.hpp"

namespace lcsac {

/// Packs batch fields into row-major matrices. Column layout conventions:
/// policy input is concat(s, c); critic input is concat(s, a, c).
Tensor pack_policy_input(const std::vector<RlTuple>& batch, bool next_step);
Tensor pack_critic_input(const std::vector<RlTuple>& batch);
Tensor pack_actions(const std::vector<RlTuple>& batch);

/// Entropy-regularized bootstrap targets, one per row:
///   r + gamma * (1 - done) * (min(Qbar1, Qbar2)(s', a', c') - alpha * log pi)
/// with a' reparameterized from `noise` ([n, action_dim] standard normals).
/// Pure evaluation: no gradients can flow out of this computation.
std::vector<double> q_target(const SacConfig& config,
                             const CriticEnsemble& critics,
                             const GaussianPolicyParams& policy,
                             const std::vector<RlTuple>& batch,
                             const Tensor& noise);

struct CriticLosses {
  double j_q1 = 0.0;
  double j_q2 = 0.0;
};

/// J_Q(phi_i) = mean over the batch of 0.5 * (Q_i(c,s,a) - target)^2.
CriticLosses critic_loss(const CriticEnsemble& critics,
                         const std::vector<RlTuple>& batch,
                         const std::vector<double>& targets);

/// J_pi = mean(alpha * log pi(a|s,c) - min(Q1, Q2)(s, a, c)) with a
/// reparameterized; value-only evaluation.
double policy_loss(const SacConfig& config, const CriticEnsemble& critics,
                   const GaussianPolicyParams& policy,
                   const std::vector<RlTuple>& batch, const Tensor& noise);

/// Critic losses plus gradients for each critic's parameters (finite-
/// difference verification surface for the Eq-6 path).
std::pair<CriticLosses, std::array<std::vector<Tensor>, 2>>
critic_loss_with_grads(const CriticEnsemble& critics,
                       const std::vector<RlTuple>& batch,
                       const std::vector<double>& targets);

/// Policy loss plus gradients for the policy parameters (Eq-8 path).
std::pair<double, std::vector<Tensor>> policy_loss_with_grads(
    const SacConfig& config, const CriticEnsemble& critics,
    const GaussianPolicyParams& policy, const std::vector<RlTuple>& batch,
    const Tensor& noise);

struct SacUpdateMetrics {
  double j_q1 = 0.0;
  double j_q2 = 0.0;
  double j_pi = 0.0;
  double mean_q = 0.0;
  double entropy_estimate = 0.0;
};

/// One full soft-policy-iteration step on a sampled batch: Adam step on each
/// critic toward q_target, Adam step on the policy, then Polyak averaging of
/// both target networks. Returns nullopt when the buffer cannot provide a
/// batch yet (caller skips and counts). Randomness is consumed in a fixed
/// order: batch indices from `batch_rng`, then target noise and policy noise
/// from `noise_rng`.
std::optional<SacUpdateMetrics> sac_update(const SacConfig& config,
                                           CriticEnsemble& critics,
                                           GaussianPolicyParams& policy,
                                           AdamState& policy_opt,
                                           const RlBuffer& buffer,
                                           Rng& batch_rng, Rng& noise_rng);

/// sac_update on an explicit batch (shared by the trainer and tests).
SacUpdateMetrics sac_update_on_batch(const SacConfig& config,
                                     CriticEnsemble& critics,
                                     GaussianPolicyParams& policy,
                                     AdamState& policy_opt,
                                     const std::vector<RlTuple>& batch,
                                     Rng& noise_rng);

}  // namespace lcsac
