#pragma once

#include <string>
#include <vector>

namespace lcsac::cli {

/// Exit codes: 0 success, 2 configuration/input error, 3 runtime abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Dispatches `train`, `eval`, `compare` or `plot`. Unknown Table-style
/// config knobs are reachable through dotted flag overrides
/// (`--sac.alpha 0.1`, `--seed 7`). The LCSAC_OUT environment variable sets
/// the default output root.
int run(const std::vector<std::string>& args);

int cmd_train(const std::vector<std::string>& args);
int cmd_eval(const std::vector<std::string>& args);
int cmd_compare(const std::vector<std::string>& args);
int cmd_plot(const std::vector<std::string>& args);

}  // namespace lcsac::cli
