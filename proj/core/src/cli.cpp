#include "lcsac/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "lcsac/errors.hpp"
#include "lcsac/io.hpp"
#include "lcsac/plot.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/trainer.hpp"

namespace lcsac::cli {

using nlohmann::json;

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string output_root() {
  const char* env = std::getenv("LCSAC_OUT");
  return env != nullptr && *env != '\0' ? env : "runs";
}

struct ParsedArgs {
  std::map<std::string, std::string> named;        // --key value
  std::vector<std::pair<std::string, std::string>> overrides;  // dotted
  std::vector<std::string> positional;
};

/// Splits known --flags from dotted config overrides and positionals.
ParsedArgs parse_args(const std::vector<std::string>& args,
                      std::initializer_list<const char*> known_flags) {
  ParsedArgs parsed;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& tok = args[i];
    if (tok.rfind("--", 0) != 0) {
      parsed.positional.push_back(tok);
      continue;
    }
    std::string key = tok.substr(2);
    std::string value;
    const auto eq = key.find('=');
    bool have_value = false;
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
      have_value = true;
    }
    if (!have_value) {
      if (i + 1 >= args.size())
        throw ConfigError("flag --" + key + " is missing a value");
      value = args[++i];
    }
    bool known = false;
    for (const char* k : known_flags)
      if (key == k) known = true;
    if (known)
      parsed.named[key] = value;
    else if (key.find('.') != std::string::npos || key == "seed" ||
             key == "out_dir")
      parsed.overrides.emplace_back(key, value);
    else
      throw ConfigError("unknown flag --" + key);
  }
  return parsed;
}

RunConfig load_config(const ParsedArgs& parsed) {
  RunConfig config;
  const auto it = parsed.named.find("config");
  if (it != parsed.named.end()) {
    if (!std::filesystem::exists(it->second))
      throw ConfigError("config file '" + it->second + "' does not exist");
    config = RunConfig::from_file(it->second);
  }
  for (const auto& [path, value] : parsed.overrides)
    config.apply_override(path, value);
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings)
    std::fprintf(stderr, "[lcsac] warning: %s\n", w.c_str());
}

json arm_json(const ArmSummary& arm, std::uint64_t config_hash) {
  json j;
  j["config_hash"] = hash_hex(config_hash);
  j["final_returns"] = arm.final_returns;
  j["mean"] = arm.mean;
  j["std"] = arm.stddev;
  return j;
}

std::string curve_csv(const ComparisonReport& report, bool arm_a,
                      const std::vector<std::uint64_t>& seeds) {
  std::string csv = "step,mean,std,half_std";
  for (std::uint64_t s : seeds) csv += ",seed_" + std::to_string(s);
  csv += '\n';
  const auto& runs = arm_a ? report.runs_a : report.runs_b;
  for (std::size_t p = 0; p < report.curve.size(); ++p) {
    const CurvePoint& point = report.curve[p];
    const double mean = arm_a ? point.mean_a : point.mean_b;
    const double half = arm_a ? point.half_std_a : point.half_std_b;
    csv += std::to_string(point.step);
    csv += ',';
    csv += format_double(mean);
    csv += ',';
    csv += format_double(2.0 * half);
    csv += ',';
    csv += format_double(half);
    for (const auto& run : runs) {
      csv += ',';
      csv += format_double(*run[p].eval_mean);
    }
    csv += '\n';
  }
  return csv;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(cell.c_str(), &end, 10);
    if (end == cell.c_str() || *end != '\0')
      throw ConfigError("bad seed '" + cell + "' in --seeds");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds is empty");
  return seeds;
}

}  // namespace

int cmd_train(const std::vector<std::string>& args) {
  RunConfig config;
  try {
    const ParsedArgs parsed = parse_args(args, {"config", "out"});
    config = load_config(parsed);
    if (parsed.named.count("out")) config.out_dir = parsed.named.at("out");
    if (config.out_dir.empty())
      config.out_dir = output_root() + "/train-" + hash_hex(config.hash()) +
                       "-s" + std::to_string(config.train.seed);
    print_warnings(config.validate());
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] config error: %s\n", e.what());
    return kExitConfig;
  }

  ensure_dir(config.out_dir);
  write_file_atomic(config.out_dir + "/resolved-config.json",
                    config.to_json() + "\n");
  try {
    auto env = make_env(config.env_name, config.env);
    const RunResult result = run_training(config, *env);

    json summary;
    summary["config_hash"] = hash_hex(config.hash());
    summary["final_mean"] = result.metrics.final_eval_mean;
    summary["final_std"] = result.metrics.final_eval_std;
    summary["wall_time_s"] = result.metrics.wall_time_s;
    summary["total_steps"] = config.train.total_steps;
    summary["episodes"] = result.metrics.episodes;
    summary["rl_updates"] = result.metrics.rl_updates;
    summary["rl_skips"] = result.metrics.rl_skips;
    summary["encoder_updates"] = result.metrics.encoder_updates;
    summary["encoder_skips"] = result.metrics.encoder_skips;
    write_file_atomic(config.out_dir + "/summary.json",
                      summary.dump(2) + "\n");
    std::printf("trained %lld steps; final eval %.4f +- %.4f; wall %.1fs\n",
                static_cast<long long>(config.train.total_steps),
                result.metrics.final_eval_mean, result.metrics.final_eval_std,
                result.metrics.wall_time_s);
    std::printf("artifacts in %s\n", config.out_dir.c_str());
    return kExitOk;
  } catch (const TrainingAbort& e) {
    json diag;
    diag["step"] = e.step;
    diag["tensor"] = e.tensor;
    diag["message"] = e.what();
    const std::string path = config.out_dir + "/abort.json";
    write_file_atomic(path, diag.dump(2) + "\n");
    std::fprintf(stderr, "[lcsac] training aborted at step %lld (%s); see %s\n",
                 static_cast<long long>(e.step), e.tensor.c_str(),
                 path.c_str());
    return kExitRuntime;
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] error: %s\n", e.what());
    return kExitRuntime;
  }
}

int cmd_eval(const std::vector<std::string>& args) {
  RunConfig config;
  std::string checkpoint_path;
  std::int64_t episodes = 10;
  std::uint64_t seed = 0;
  std::string trace_path;
  try {
    const ParsedArgs parsed = parse_args(
        args, {"config", "checkpoint", "episodes", "eval-seed", "trace"});
    config = load_config(parsed);
    if (!parsed.named.count("checkpoint"))
      throw ConfigError("eval requires --checkpoint");
    checkpoint_path = parsed.named.at("checkpoint");
    if (parsed.named.count("episodes"))
      episodes = std::strtoll(parsed.named.at("episodes").c_str(), nullptr, 10);
    if (parsed.named.count("eval-seed"))
      seed = std::strtoull(parsed.named.at("eval-seed").c_str(), nullptr, 10);
    if (parsed.named.count("trace")) trace_path = parsed.named.at("trace");
    config.validate();
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    const Checkpoint ck = Checkpoint::load(checkpoint_path);
    auto env = make_env(config.env_name, config.env);
    const EnvSpec& spec = env->spec();
    const std::int64_t c_dim = config.encoder.context_dim;

    Rng dummy(0);
    GaussianPolicyParams policy = GaussianPolicyParams::init(
        {spec.obs_dim + c_dim, config.mlp_hidden, spec.action_dim}, dummy);
    if (!policy.params.congruent(ck.sections.at("policy")))
      throw ConfigError(
          "checkpoint policy shapes do not match the config (wrong config "
          "for this checkpoint?)");
    policy.params = ck.sections.at("policy");

    std::optional<EncoderParams> encoder;
    if (c_dim > 0) {
      EncoderConfig enc_cfg;
      enc_cfg.s_dim = spec.obs_dim;
      enc_cfg.a_dim = spec.action_dim;
      enc_cfg.context_dim = c_dim;
      enc_cfg.hidden = config.encoder.hidden;
      enc_cfg.mode = config.encoder.mode;
      enc_cfg.e_mode = config.encoder.e_mode;
      encoder.emplace(EncoderParams::init(enc_cfg, dummy));
      if (!encoder->params.congruent(ck.sections.at("encoder")))
        throw ConfigError("checkpoint encoder shapes do not match the config");
      encoder->params = ck.sections.at("encoder");
    }

    // Evaluation loop with optional trace dump (step, obs..., action...,
    // reward, done), one block of rows per episode.
    std::string trace;
    if (!trace_path.empty()) {
      trace = "episode,step";
      for (std::int64_t i = 0; i < spec.obs_dim; ++i)
        trace += ",obs" + std::to_string(i);
      for (std::int64_t i = 0; i < spec.action_dim; ++i)
        trace += ",action" + std::to_string(i);
      trace += ",reward,done\n";
    }
    Rng rng = Rng::derive(seed, "eval", 0);
    std::vector<double> returns;
    std::optional<EncoderStream> stream;
    if (encoder) stream.emplace(*encoder);
    for (std::int64_t ep = 0; ep < episodes; ++ep) {
      std::vector<double> obs = env->reset(rng);
      std::vector<double> context;
      if (stream) {
        stream->reset();
        context = stream->initial_context().value;
      }
      double total = 0.0;
      bool done = false;
      std::int64_t step_idx = 0;
      while (!done) {
        std::vector<double> input = obs;
        input.insert(input.end(), context.begin(), context.end());
        const auto canonical = policy_act_mean(policy, input);
        const auto env_action = to_env_action(spec, canonical);
        const StepResult result = env->step(env_action);
        if (!trace_path.empty()) {
          trace += std::to_string(ep) + "," + std::to_string(step_idx);
          for (double v : obs) trace += "," + format_double(v);
          for (double v : env_action) trace += "," + format_double(v);
          trace += "," + format_double(result.reward) + "," +
                   (result.done ? "1" : "0") + "\n";
        }
        total += result.reward;
        if (stream) context = stream->step(obs, canonical, result.reward).value;
        obs = result.observation;
        done = result.done;
        ++step_idx;
      }
      returns.push_back(total);
    }
    if (!trace_path.empty()) write_file_atomic(trace_path, trace);
    std::printf("eval over %lld episodes: mean %.6f std %.6f\n",
                static_cast<long long>(episodes), mean_of(returns),
                std_of(returns));
    return kExitOk;
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] error: %s\n", e.what());
    return kExitRuntime;
  }
}

int cmd_compare(const std::vector<std::string>& args) {
  RunConfig config_a, config_b;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  int jobs = 1;
  try {
    const ParsedArgs parsed =
        parse_args(args, {"config-a", "config-b", "seeds", "out", "jobs"});
    if (!parsed.named.count("config-a") || !parsed.named.count("config-b"))
      throw ConfigError("compare requires --config-a and --config-b");
    for (const char* key : {"config-a", "config-b"})
      if (!std::filesystem::exists(parsed.named.at(key)))
        throw ConfigError("config file '" + parsed.named.at(key) +
                          "' does not exist");
    config_a = RunConfig::from_file(parsed.named.at("config-a"));
    config_b = RunConfig::from_file(parsed.named.at("config-b"));
    for (const auto& [path, value] : parsed.overrides) {
      config_a.apply_override(path, value);
      config_b.apply_override(path, value);
    }
    seeds = parse_seeds(parsed.named.count("seeds") ? parsed.named.at("seeds")
                                                    : "1,2,3,4,5");
    if (parsed.named.count("jobs"))
      jobs = std::atoi(parsed.named.at("jobs").c_str());
    if (jobs < 1)
      jobs = static_cast<int>(std::thread::hardware_concurrency());
    out_dir = parsed.named.count("out")
                  ? parsed.named.at("out")
                  : output_root() + "/compare-" + hash_hex(config_a.hash()).substr(0, 8) +
                        "-" + hash_hex(config_b.hash()).substr(0, 8);
    print_warnings(config_a.validate());
    print_warnings(config_b.validate());
    if (config_a.env_name != config_b.env_name)
      throw ConfigError("comparisons must share the task: '" +
                        config_a.env_name + "' vs '" + config_b.env_name +
                        "'");
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    ensure_dir(out_dir);
    write_file_atomic(out_dir + "/config_a.json", config_a.to_json() + "\n");
    write_file_atomic(out_dir + "/config_b.json", config_b.to_json() + "\n");
    const auto t0 = std::chrono::steady_clock::now();
    const ComparisonReport report =
        ab_experiment(config_a, config_b, seeds, out_dir, jobs);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    json doc;
    doc["env"] = config_a.env_name;
    doc["seeds"] = seeds;
    doc["arm_a"] = arm_json(report.arm_a, config_a.hash());
    doc["arm_b"] = arm_json(report.arm_b, config_b.hash());
    doc["delta_mean"] = report.arm_a.mean - report.arm_b.mean;
    doc["welch"]["t"] = report.welch.t;
    doc["welch"]["df"] = report.welch.df;
    doc["welch"]["p_one_sided_a_gt_b"] = report.welch.p_one_sided;
    doc["welch"]["p_two_sided"] = report.welch.p_two_sided;
    doc["wall_time_s"] = wall;
    write_file_atomic(out_dir + "/comparison.json", doc.dump(2) + "\n");
    write_file_atomic(out_dir + "/arm_a_curve.csv",
                      curve_csv(report, true, seeds));
    write_file_atomic(out_dir + "/arm_b_curve.csv",
                      curve_csv(report, false, seeds));

    std::printf("arm_a %.4f +- %.4f | arm_b %.4f +- %.4f | delta %.4f | "
                "p(one-sided a>b) %.4g\n",
                report.arm_a.mean, report.arm_a.stddev, report.arm_b.mean,
                report.arm_b.stddev, report.arm_a.mean - report.arm_b.mean,
                report.welch.p_one_sided);
    std::printf("report in %s\n", out_dir.c_str());
    return kExitOk;
  } catch (const TrainingAbort& e) {
    std::fprintf(stderr, "[lcsac] training aborted at step %lld (%s)\n",
                 static_cast<long long>(e.step), e.tensor.c_str());
    return kExitRuntime;
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] error: %s\n", e.what());
    return kExitRuntime;
  }
}

int cmd_plot(const std::vector<std::string>& args) {
  std::string out_path;
  std::vector<std::string> csv_paths;
  try {
    const ParsedArgs parsed = parse_args(args, {"out"});
    if (!parsed.named.count("out")) throw ConfigError("plot requires --out");
    out_path = parsed.named.at("out");
    csv_paths = parsed.positional;
    if (csv_paths.empty())
      throw ConfigError("plot requires at least one metrics CSV");
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    std::vector<CurveSeries> series;
    for (const std::string& path : csv_paths)
      series.push_back(read_curve_csv(path));
    write_file_atomic(out_path, render_plot_svg(series));
    std::printf("wrote %s (%zu series)\n", out_path.c_str(), series.size());
    return kExitOk;
  } catch (const IoError& e) {
    std::fprintf(stderr, "[lcsac] error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "[lcsac] error: %s\n", e.what());
    return kExitRuntime;
  }
}

int run(const std::vector<std::string>& args) {
  if (args.empty()) {
    std::fprintf(stderr,
                 "usage: lcsac <train|eval|compare|plot> [options]\n"
                 "  train   --config FILE [--out DIR] [--<dotted.key> VALUE]\n"
                 "  eval    --checkpoint FILE [--config FILE] [--episodes N]"
                 " [--eval-seed S] [--trace FILE]\n"
                 "  compare --config-a FILE --config-b FILE [--seeds 1,2,..]"
                 " [--out DIR] [--jobs N]\n"
                 "  plot    --out FILE.svg metrics.csv [more.csv ...]\n");
    return kExitConfig;
  }
  const std::string command = args[0];
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (command == "train") return cmd_train(rest);
  if (command == "eval") return cmd_eval(rest);
  if (command == "compare") return cmd_compare(rest);
  if (command == "plot") return cmd_plot(rest);
  std::fprintf(stderr, "[lcsac] unknown command '%s'\n", command.c_str());
  return kExitConfig;
}

}  // namespace lcsac::cli
