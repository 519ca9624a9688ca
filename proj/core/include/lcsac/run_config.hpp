#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcsac/encoder.hpp"
#include "lcsac/envs.hpp"
#include "lcsac/sac_types.hpp"

namespace lcsac {

struct TrainerConfig {
  std::int64_t total_steps = 100000;           // M
  std::int64_t warmup_steps = 2000;            // uniform actions, no updates
  std::int64_t n_rl = 50;                      // RL trigger period
  std::int64_t n_c = 500;                      // encoder trigger period
  std::int64_t rl_updates_per_trigger = 50;
  std::int64_t encoder_updates_per_trigger = 50;
  std::int64_t eval_interval = 10000;
  std::int64_t eval_episodes = 10;
  std::uint64_t seed = 0;
};

struct EncoderTrainConfig {
  std::int64_t context_dim = 5;  // 0 disables the encoder (plain SAC)
  std::int64_t hidden = 128;
  ContextMode mode = ContextMode::kDeterministic;
  TransitionEncoding e_mode = TransitionEncoding::kSar;
  std::int64_t segment_len = 20;
  std::int64_t batch = 128;
  double beta1 = 0.0;
  double beta2 = 0.2;
  double lr = 3e-4;
};

/// Complete description of a training run. Every field has a default; JSON
/// configs override selectively and reject unknown keys.
struct RunConfig {
  std::string env_name = "stationary-reach";
  EnvOptions env;
  TrainerConfig train;
  SacConfig sac;
  EncoderTrainConfig encoder;
  std::int64_t mlp_hidden = 256;
  std::int64_t replay_capacity = 1000000;
  std::string out_dir;

  /// Throws ConfigError with a field-level message; returns non-fatal
  /// warnings (e.g. n_c <= n_rl, which the reference setup advises against
  /// but experiments may probe).
  std::vector<std::string> validate() const;

  /// Canonical JSON of the fully resolved config (all defaults made
  /// explicit, keys sorted).
  std::string to_json() const;
  std::uint64_t hash() const;

  static RunConfig from_json(const std::string& json_text);
  static RunConfig from_file(const std::string& path);

  /// Applies a dotted-path override ("sac.alpha=0.1", "train.seed=7");
  /// "seed" is shorthand for "train.seed". Values are parsed as JSON
  /// scalars. Throws ConfigError for unknown paths or bad values.
  void apply_override(const std::string& dotted_path,
                      const std::string& value);
};

}  // namespace lcsac
