#include "lcsac/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lcsac/errors.hpp"
#include "lcsac/rng.hpp"

namespace lcsac {
namespace {

double clampd(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

}  // namespace

std::vector<double> Env::clip_action(std::span<const double> action) {
  const EnvSpec& sp = spec();
  if (static_cast<std::int64_t>(action.size()) != sp.action_dim)
    throw DimensionError("env.step: action width " +
                         std::to_string(action.size()) + " does not match " +
                         std::to_string(sp.action_dim));
  std::vector<double> clipped(action.begin(), action.end());
  bool any = false;
  for (std::int64_t i = 0; i < sp.action_dim; ++i) {
    const double lo = sp.action_low[static_cast<std::size_t>(i)];
    const double hi = sp.action_high[static_cast<std::size_t>(i)];
    if (clipped[static_cast<std::size_t>(i)] < lo ||
        clipped[static_cast<std::size_t>(i)] > hi) {
      clipped[static_cast<std::size_t>(i)] =
          clampd(clipped[static_cast<std::size_t>(i)], lo, hi);
      any = true;
    }
  }
  if (any) {
    if (clip_warnings_ == 0)
      std::fprintf(stderr,
                   "[lcsac] %s: out-of-bounds action clipped (reported once)\n",
                   sp.name.c_str());
    clip_warnings_ += 1;
  }
  return clipped;
}

namespace {

// ---------------------------------------------------------------------------
// Point-mass reach environments
// ---------------------------------------------------------------------------

class ReachEnv : public Env {
 public:
  ReachEnv(bool stationary, const EnvOptions& options)
      : options_(options), stationary_(stationary) {
    spec_.name = stationary ? "stationary-reach" : "goal-reach";
    spec_.obs_dim = options.observe_goal ? 4 : 2;
    spec_.action_dim = 2;
    spec_.action_low = {-options.max_speed, -options.max_speed};
    spec_.action_high = {options.max_speed, options.max_speed};
    spec_.max_episode_steps = options.horizon;
    spec_.stationary = stationary;
    if (!stationary && options.goal_count < 1)
      throw ConfigError("goal-reach: goal_count must be >= 1");
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(Rng& rng) override {
    if (stationary_) {
      // Fixed goal at the origin, random start anywhere in the box.
      goal_ = {0.0, 0.0};
      goal_index_ = -1;
      pos_ = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    } else {
      // Hidden goal drawn from K fixed locations on a circle. Starts come
      // from a coarse 9x9 grid: varied enough that rewards identify the
      // goal, discrete so episodes with identical starts and different
      // goals exist (the task is non-Markovian in the observation).
      goal_index_ = rng.uniform_int(options_.goal_count);
      const double angle = 2.0 * M_PI * static_cast<double>(goal_index_) /
                           static_cast<double>(options_.goal_count);
      goal_ = {0.6 * std::cos(angle), 0.6 * std::sin(angle)};
      const std::int64_t cell =
          options_.start_cell >= 0 ? options_.start_cell % 81
                                   : rng.uniform_int(81);
      pos_ = {-0.8 + 0.2 * static_cast<double>(cell % 9),
              -0.8 + 0.2 * static_cast<double>(cell / 9)};
    }
    steps_ = 0;
    finished_ = false;
    return pos();
  }

  StepResult step(std::span<const double> action) override {
    if (finished_)
      throw ContractError(spec_.name + ": step() after done; call reset()");
    const std::vector<double> a = clip_action(action);
    pos_[0] = clampd(pos_[0] + a[0], -1.0, 1.0);
    pos_[1] = clampd(pos_[1] + a[1], -1.0, 1.0);
    steps_ += 1;

    const double dist = distance_to_goal();
    const bool success = dist < options_.success_radius;
    StepResult result;
    result.observation = pos();
    result.reward = options_.reward_free ? 0.0 : -dist;
    result.done = success || steps_ >= options_.horizon;
    result.info["goal_x"] = goal_[0];
    result.info["goal_y"] = goal_[1];
    result.info["goal_index"] = static_cast<double>(goal_index_);
    result.info["distance"] = dist;
    result.info["success"] = success ? 1.0 : 0.0;
    finished_ = result.done;
    return result;
  }

  std::vector<double> oracle_action() const override {
    const double dx = goal_[0] - pos_[0];
    const double dy = goal_[1] - pos_[1];
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist < 1e-12) return {0.0, 0.0};
    const double step_len = std::min(options_.max_speed, dist);
    return {dx / dist * step_len, dy / dist * step_len};
  }

  std::unique_ptr<Env> clone_fresh() const override {
    return std::make_unique<ReachEnv>(stationary_, options_);
  }

 private:
  std::vector<double> pos() const {
    if (options_.observe_goal) return {pos_[0], pos_[1], goal_[0], goal_[1]};
    return {pos_[0], pos_[1]};
  }
  double distance_to_goal() const {
    const double dx = pos_[0] - goal_[0];
    const double dy = pos_[1] - goal_[1];
    return std::sqrt(dx * dx + dy * dy);
  }

  EnvSpec spec_;
  EnvOptions options_;
  bool stationary_;
  std::array<double, 2> pos_{0.0, 0.0};
  std::array<double, 2> goal_{0.0, 0.0};
  std::int64_t goal_index_ = -1;
  std::int64_t steps_ = 0;
  bool finished_ = true;
};

// ---------------------------------------------------------------------------
// Hidden-dynamics double integrator
// ---------------------------------------------------------------------------

class DriftingMassEnv : public Env {
 public:
  explicit DriftingMassEnv(const EnvOptions& options) : options_(options) {
    spec_.name = "drifting-mass";
    spec_.obs_dim = 2;
    spec_.action_dim = 1;
    spec_.action_low = {-1.0};
    spec_.action_high = {1.0};
    spec_.max_episode_steps = options.horizon;
    spec_.stationary = false;
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(Rng& rng) override {
    mass_ = rng.uniform(0.5, 2.0);
    friction_ = rng.uniform(0.0, 0.3);
    x_ = 0.0;
    v_ = 0.0;
    steps_ = 0;
    finished_ = false;
    return {x_, v_};
  }

  StepResult step(std::span<const double> action) override {
    if (finished_)
      throw ContractError("drifting-mass: step() after done; call reset()");
    const double force = clip_action(action)[0];
    const double accel = (force - friction_ * v_) / mass_;
    v_ = clampd(v_ + kDt * accel, -3.0, 3.0);
    x_ = clampd(x_ + kDt * v_, -2.0, 2.0);
    steps_ += 1;

    const double dist = std::abs(x_ - kGoal);
    const bool success = dist < options_.success_radius;
    StepResult result;
    result.observation = {x_, v_};
    result.reward =
        options_.reward_free ? 0.0 : -dist - 0.01 * force * force;
    result.done = success || steps_ >= options_.horizon;
    result.info["mass"] = mass_;
    result.info["friction"] = friction_;
    result.info["distance"] = dist;
    result.info["success"] = success ? 1.0 : 0.0;
    finished_ = result.done;
    return result;
  }

  std::vector<double> oracle_action() const override {
    // PD control with feedback linearization using the hidden parameters.
    const double kp = 2.0;
    const double kd = 2.0 * std::sqrt(kp);
    const double desired_accel = kp * (kGoal - x_) - kd * v_;
    return {clampd(mass_ * desired_accel + friction_ * v_, -1.0, 1.0)};
  }

  std::unique_ptr<Env> clone_fresh() const override {
    return std::make_unique<DriftingMassEnv>(options_);
  }

 private:
  static constexpr double kDt = 0.1;
  static constexpr double kGoal = 1.0;

  EnvSpec spec_;
  EnvOptions options_;
  double mass_ = 1.0;
  double friction_ = 0.0;
  double x_ = 0.0;
  double v_ = 0.0;
  std::int64_t steps_ = 0;
  bool finished_ = true;
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& name,
                              const EnvOptions& options) {
  if (options.horizon < 2) throw ConfigError("env: horizon must be >= 2");
  if (name == "stationary-reach")
    return std::make_unique<ReachEnv>(true, options);
  if (name == "goal-reach") return std::make_unique<ReachEnv>(false, options);
  if (name == "drifting-mass")
    return std::make_unique<DriftingMassEnv>(options);
  throw ConfigError("unknown environment '" + name +
                    "' (expected stationary-reach, goal-reach or "
                    "drifting-mass)");
}

double optimal_return_oracle(Env& env, std::uint64_t seed) {
  Rng rng(seed);
  env.reset(rng);
  double total = 0.0;
  for (std::int64_t i = 0; i < env.spec().max_episode_steps; ++i) {
    const StepResult result = env.step(env.oracle_action());
    total += result.reward;
    if (result.done) break;
  }
  return total;
}

std::vector<double> to_env_action(const EnvSpec& spec,
                                  std::span<const double> canonical) {
  if (static_cast<std::int64_t>(canonical.size()) != spec.action_dim)
    throw DimensionError("to_env_action: width mismatch");
  std::vector<double> out(canonical.size());
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const double lo = spec.action_low[i];
    const double hi = spec.action_high[i];
    out[i] = lo + (canonical[i] + 1.0) * 0.5 * (hi - lo);
  }
  return out;
}

}  // namespace lcsac
