#pragma once

// Reference SAC trainer: a straight-line rollout/update loop with no context
// machinery at all (no encoder, no segment buffer, no context columns).
// Consumes the same named RNG streams as the full trainer so that a
// context_dim = 0 LC-SAC run must reproduce it bit for bit.

#include <memory>
#include <vector>

#include "lcsac/envs.hpp"
#include "lcsac/nets.hpp"
#include "lcsac/replay.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/run_config.hpp"
#include "lcsac/sac.hpp"
#include "lcsac/trainer.hpp"

namespace lcsac::testing {

struct PlainSacResult {
  std::vector<SacUpdateMetrics> updates;
  std::vector<std::pair<std::int64_t, double>> eval_means;
};

inline PlainSacResult run_plain_sac(const RunConfig& config, Env& env) {
  const EnvSpec& spec = env.spec();
  const std::int64_t s_dim = spec.obs_dim;
  const std::int64_t a_dim = spec.action_dim;

  Rng env_rng = Rng::derive(config.train.seed, "env");
  Rng warmup_rng = Rng::derive(config.train.seed, "warmup-action");
  Rng action_noise = Rng::derive(config.train.seed, "action-noise");
  Rng rl_batch = Rng::derive(config.train.seed, "rl-batch");
  Rng update_noise = Rng::derive(config.train.seed, "update-noise");
  Rng policy_init = Rng::derive(config.train.seed, "policy-init");
  Rng critic_init = Rng::derive(config.train.seed, "critic-init");

  GaussianPolicyParams policy =
      GaussianPolicyParams::init({s_dim, config.mlp_hidden, a_dim}, policy_init);
  AdamState policy_opt;
  CriticEnsemble critics =
      CriticEnsemble::init(s_dim, a_dim, 0, config.mlp_hidden, critic_init);
  RlBuffer buffer(config.replay_capacity, 0, s_dim, a_dim);

  PlainSacResult out;
  std::vector<double> obs = env.reset(env_rng);

  for (std::int64_t t = 1; t <= config.train.total_steps; ++t) {
    std::vector<double> canonical(static_cast<std::size_t>(a_dim));
    if (t <= config.train.warmup_steps) {
      for (double& v : canonical) v = warmup_rng.uniform(-1.0, 1.0);
    } else {
      std::vector<double> noise(static_cast<std::size_t>(a_dim));
      for (double& v : noise) v = action_noise.normal();
      canonical = policy_act(policy, obs, noise);
    }
    const StepResult result = env.step(to_env_action(spec, canonical));
    buffer.push({{}, obs, canonical, result.reward, result.observation, {},
                 result.done});
    obs = result.observation;
    if (result.done) obs = env.reset(env_rng);

    if (t > config.train.warmup_steps && t % config.train.n_rl == 0) {
      for (std::int64_t k = 0; k < config.train.rl_updates_per_trigger; ++k) {
        auto m = sac_update(config.sac, critics, policy, policy_opt, buffer,
                            rl_batch, update_noise);
        if (m) out.updates.push_back(*m);
      }
    }

    if (t % config.train.eval_interval == 0 ||
        t == config.train.total_steps) {
      std::unique_ptr<Env> eval_env = env.clone_fresh();
      Rng eval_rng = Rng::derive(config.train.seed, "eval",
                                 static_cast<std::uint64_t>(t));
      const auto [mean, stddev] = evaluate(policy, nullptr, *eval_env,
                                           config.train.eval_episodes,
                                           eval_rng);
      out.eval_means.emplace_back(t, mean);
    }
  }
  return out;
}

}  // namespace lcsac::testing
