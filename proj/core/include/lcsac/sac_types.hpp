#pragma once

#include <cstdint>

#include "lcsac/nets.hpp"
#include "lcsac/param_set.hpp"

namespace lcsac {

/// Soft actor-critic hyperparameters.
struct SacConfig {
  double alpha = 0.2;    // entropy coefficient (fixed, no auto-tuning)
  double gamma = 0.99;   // discount
  double tau = 0.005;    // target smoothing coefficient
  double lr = 3e-4;
  std::int64_t batch = 128;

  void validate() const;
};

/// Twin Q networks with slow-moving target copies. Q inputs are
/// concat(state, action, context); outputs are scalars. Targets are only
/// ever written through polyak_update.
struct CriticEnsemble {
  MlpParams q1;
  MlpParams q2;
  MlpParams target_q1;
  MlpParams target_q2;
  AdamState q1_opt;
  AdamState q2_opt;

  static CriticEnsemble init(std::int64_t s_dim, std::int64_t a_dim,
                             std::int64_t c_dim, std::int64_t hidden,
                             Rng& rng);
};

}  // namespace lcsac
