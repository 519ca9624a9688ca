#include "lcsac/run_config.hpp"

#include <json.hpp>

#include "lcsac/errors.hpp"
#include "lcsac/io.hpp"
#include "lcsac/rng.hpp"

namespace lcsac {

using nlohmann::ordered_json;

namespace {

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["env"]["name"] = c.env_name;
  j["env"]["goals"] = c.env.goal_count;
  j["env"]["horizon"] = c.env.horizon;
  j["env"]["success_radius"] = c.env.success_radius;
  j["env"]["max_speed"] = c.env.max_speed;
  j["env"]["reward_free"] = c.env.reward_free;
  j["env"]["start_cell"] = c.env.start_cell;
  j["env"]["observe_goal"] = c.env.observe_goal;
  j["train"]["total_steps"] = c.train.total_steps;
  j["train"]["warmup_steps"] = c.train.warmup_steps;
  j["train"]["n_rl"] = c.train.n_rl;
  j["train"]["n_c"] = c.train.n_c;
  j["train"]["rl_updates_per_trigger"] = c.train.rl_updates_per_trigger;
  j["train"]["encoder_updates_per_trigger"] =
      c.train.encoder_updates_per_trigger;
  j["train"]["eval_interval"] = c.train.eval_interval;
  j["train"]["eval_episodes"] = c.train.eval_episodes;
  j["train"]["seed"] = c.train.seed;
  j["sac"]["alpha"] = c.sac.alpha;
  j["sac"]["gamma"] = c.sac.gamma;
  j["sac"]["tau"] = c.sac.tau;
  j["sac"]["lr"] = c.sac.lr;
  j["sac"]["batch"] = c.sac.batch;
  j["encoder"]["context_dim"] = c.encoder.context_dim;
  j["encoder"]["hidden"] = c.encoder.hidden;
  j["encoder"]["mode"] = c.encoder.mode == ContextMode::kProbabilistic
                             ? "probabilistic"
                             : "deterministic";
  j["encoder"]["e_mode"] =
      c.encoder.e_mode == TransitionEncoding::kStateOnly ? "s" : "sar";
  j["encoder"]["segment_len"] = c.encoder.segment_len;
  j["encoder"]["batch"] = c.encoder.batch;
  j["encoder"]["beta1"] = c.encoder.beta1;
  j["encoder"]["beta2"] = c.encoder.beta2;
  j["encoder"]["lr"] = c.encoder.lr;
  j["nets"]["hidden"] = c.mlp_hidden;
  j["replay"]["capacity"] = c.replay_capacity;
  j["out_dir"] = c.out_dir;
  return j;
}

template <typename T>
void read_field(const ordered_json& obj, const std::string& section,
                const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + section + "." + key +
                      "' has the wrong type");
  }
}

void reject_unknown(const ordered_json& obj, const std::string& section,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok)
      throw ConfigError("unknown config key '" +
                        (section.empty() ? key : section + "." + key) + "'");
  }
}

void merge_json(RunConfig& c, const ordered_json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j, "", {"env", "train", "sac", "encoder", "nets", "replay",
                         "out_dir", "seed"});
  if (j.contains("seed")) {
    // Top-level shorthand for train.seed.
    try {
      c.train.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config field 'seed' has the wrong type");
    }
  }
  if (j.contains("env")) {
    const auto& e = j.at("env");
    reject_unknown(e, "env", {"name", "goals", "horizon", "success_radius",
                              "max_speed", "reward_free", "start_cell",
                              "observe_goal"});
    read_field(e, "env", "name", c.env_name);
    read_field(e, "env", "goals", c.env.goal_count);
    read_field(e, "env", "horizon", c.env.horizon);
    read_field(e, "env", "success_radius", c.env.success_radius);
    read_field(e, "env", "max_speed", c.env.max_speed);
    read_field(e, "env", "reward_free", c.env.reward_free);
    read_field(e, "env", "start_cell", c.env.start_cell);
    read_field(e, "env", "observe_goal", c.env.observe_goal);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t, "train",
                   {"total_steps", "warmup_steps", "n_rl", "n_c",
                    "rl_updates_per_trigger", "encoder_updates_per_trigger",
                    "eval_interval", "eval_episodes", "seed"});
    read_field(t, "train", "total_steps", c.train.total_steps);
    read_field(t, "train", "warmup_steps", c.train.warmup_steps);
    read_field(t, "train", "n_rl", c.train.n_rl);
    read_field(t, "train", "n_c", c.train.n_c);
    read_field(t, "train", "rl_updates_per_trigger",
               c.train.rl_updates_per_trigger);
    read_field(t, "train", "encoder_updates_per_trigger",
               c.train.encoder_updates_per_trigger);
    read_field(t, "train", "eval_interval", c.train.eval_interval);
    read_field(t, "train", "eval_episodes", c.train.eval_episodes);
    read_field(t, "train", "seed", c.train.seed);
  }
  if (j.contains("sac")) {
    const auto& s = j.at("sac");
    reject_unknown(s, "sac", {"alpha", "gamma", "tau", "lr", "batch"});
    read_field(s, "sac", "alpha", c.sac.alpha);
    read_field(s, "sac", "gamma", c.sac.gamma);
    read_field(s, "sac", "tau", c.sac.tau);
    read_field(s, "sac", "lr", c.sac.lr);
    read_field(s, "sac", "batch", c.sac.batch);
  }
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    reject_unknown(e, "encoder",
                   {"context_dim", "hidden", "mode", "e_mode", "segment_len",
                    "batch", "beta1", "beta2", "lr"});
    read_field(e, "encoder", "context_dim", c.encoder.context_dim);
    read_field(e, "encoder", "hidden", c.encoder.hidden);
    if (e.contains("mode")) {
      const std::string mode = e.at("mode").get<std::string>();
      if (mode == "deterministic")
        c.encoder.mode = ContextMode::kDeterministic;
      else if (mode == "probabilistic")
        c.encoder.mode = ContextMode::kProbabilistic;
      else
        throw ConfigError(
            "encoder.mode must be 'deterministic' or 'probabilistic', got '" +
            mode + "'");
    }
    if (e.contains("e_mode")) {
      const std::string em = e.at("e_mode").get<std::string>();
      if (em == "sar")
        c.encoder.e_mode = TransitionEncoding::kSar;
      else if (em == "s")
        c.encoder.e_mode = TransitionEncoding::kStateOnly;
      else
        throw ConfigError("encoder.e_mode must be 'sar' or 's', got '" + em +
                          "'");
    }
    read_field(e, "encoder", "segment_len", c.encoder.segment_len);
    read_field(e, "encoder", "batch", c.encoder.batch);
    read_field(e, "encoder", "beta1", c.encoder.beta1);
    read_field(e, "encoder", "beta2", c.encoder.beta2);
    read_field(e, "encoder", "lr", c.encoder.lr);
  }
  if (j.contains("nets")) {
    reject_unknown(j.at("nets"), "nets", {"hidden"});
    read_field(j.at("nets"), "nets", "hidden", c.mlp_hidden);
  }
  if (j.contains("replay")) {
    reject_unknown(j.at("replay"), "replay", {"capacity"});
    read_field(j.at("replay"), "replay", "capacity", c.replay_capacity);
  }
  read_field(j, "", "out_dir", c.out_dir);
}

}  // namespace

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> warnings;
  sac.validate();
  if (train.total_steps < train.warmup_steps)
    throw ConfigError("train.total_steps must be >= train.warmup_steps");
  if (train.n_rl < 1) throw ConfigError("train.n_rl must be >= 1");
  if (train.n_c < 1) throw ConfigError("train.n_c must be >= 1");
  if (train.rl_updates_per_trigger < 0 ||
      train.encoder_updates_per_trigger < 0)
    throw ConfigError("updates-per-trigger must be >= 0");
  if (train.eval_interval < 1)
    throw ConfigError("train.eval_interval must be >= 1");
  if (train.eval_episodes < 1)
    throw ConfigError("train.eval_episodes must be >= 1");
  if (encoder.context_dim < 0)
    throw ConfigError("encoder.context_dim must be >= 0");
  if (encoder.context_dim > 0 && encoder.segment_len < 2)
    throw ConfigError("encoder.segment_len must be >= 2");
  if (encoder.batch < 2) throw ConfigError("encoder.batch must be >= 2");
  if (encoder.beta1 < 0 || encoder.beta2 < 0)
    throw ConfigError("encoder.beta1/beta2 must be >= 0");
  if (mlp_hidden < 1) throw ConfigError("nets.hidden must be >= 1");
  if (replay_capacity < 1) throw ConfigError("replay.capacity must be >= 1");
  if (encoder.context_dim > 0 && train.n_c <= train.n_rl)
    warnings.push_back(
        "train.n_c <= train.n_rl: the reference setup keeps the encoder "
        "update period above the RL period");
  make_env(env_name, env);  // name + option validation
  return warnings;
}

std::string RunConfig::to_json() const { return config_to_json(*this).dump(2); }

std::uint64_t RunConfig::hash() const {
  // Hash a key-sorted dump so formatting cannot affect identity.
  const nlohmann::json sorted = nlohmann::json::parse(config_to_json(*this).dump());
  return fnv1a64(sorted.dump());
}

RunConfig RunConfig::from_json(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  merge_json(c, j);
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_json(read_file(path));
}

void RunConfig::apply_override(const std::string& dotted_path,
                               const std::string& value) {
  std::string path = dotted_path == "seed" ? "train.seed" : dotted_path;
  if (path == "out_dir") {
    out_dir = value;
    return;
  }
  const auto dot = path.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override '" + dotted_path +
                      "' must use a dotted path like sac.alpha");
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);

  ordered_json parsed;
  try {
    parsed = ordered_json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;  // bare strings (env names, modes)
  }
  ordered_json patch;
  patch[section][key] = parsed;
  merge_json(*this, patch);
}

}  // namespace lcsac
