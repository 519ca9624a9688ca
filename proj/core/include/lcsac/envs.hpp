#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lcsac {

class Rng;

struct EnvSpec {
  std::string name;
  std::int64_t obs_dim = 0;
  std::int64_t action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  std::int64_t max_episode_steps = 100;
  bool stationary = true;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  /// Diagnostics, including the hidden goal/parameters. For tests and
  /// logging only; agents never see this channel.
  std::map<std::string, double> info;
};

/// Episodic continuous-control environment. Hidden task parameters (goal,
/// mass, friction) are redrawn on reset in non-stationary variants and are
/// never part of the observation. Dynamics are pure functions of the state,
/// action and hidden parameters.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  /// Re-initializes the episode; non-stationary variants redraw their hidden
  /// parameters from `rng`.
  virtual std::vector<double> reset(Rng& rng) = 0;
  /// Advances one tick. Out-of-bounds actions are clipped (with a counted
  /// warning); stepping a finished episode is a contract error.
  virtual StepResult step(std::span<const double> action) = 0;
  /// Greedy action of the analytic controller that knows the hidden state.
  virtual std::vector<double> oracle_action() const = 0;
  /// Fresh instance with the same configuration (separate episodes, e.g.
  /// for evaluation).
  virtual std::unique_ptr<Env> clone_fresh() const = 0;

  std::int64_t clip_warning_count() const { return clip_warnings_; }

 protected:
  std::vector<double> clip_action(std::span<const double> action);
  std::int64_t clip_warnings_ = 0;
};

struct EnvOptions {
  std::int64_t goal_count = 10;   // GoalReach2D
  std::int64_t horizon = 100;
  double success_radius = 0.05;
  double max_speed = 0.1;         // per-step displacement bound, reach envs
  bool reward_free = false;       // diagnostic variant: reward always 0
  std::int64_t start_cell = -1;   // goal-reach: pin the start grid cell (0-80)
  bool observe_goal = false;      // fully-observed variant: obs = (pos, goal)
};

/// Built-in environments: "stationary-reach" (fixed goal at the origin,
/// random start), "goal-reach" (hidden goal drawn from `goal_count` fixed
/// locations each episode, fixed start), "drifting-mass" (1-D double
/// integrator with hidden mass and friction). Throws ConfigError for unknown
/// names.
std::unique_ptr<Env> make_env(const std::string& name,
                              const EnvOptions& options = {});

/// Episode return of the greedy controller that knows the hidden state,
/// starting from a reset with `seed`. Used as a normalization ceiling.
double optimal_return_oracle(Env& env, std::uint64_t seed);

/// Affine map from the policy's canonical (-1,1) box to the declared action
/// box (and back).
std::vector<double> to_env_action(const EnvSpec& spec,
                                  std::span<const double> canonical);

}  // namespace lcsac
