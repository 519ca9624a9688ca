#pragma once

// Acceptance suite: one callable check per criterion, each printing a single
// PASS/FAIL line with its runtime.

#include <string>
#include <vector>

#include "lcsac/run_config.hpp"

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome c1_gradient_correctness();
Outcome c2_sac_reduction();
Outcome c3_infonce_sanity();
Outcome c4_nonstationary_advantage();
Outcome c5_stationary_parity();
Outcome c6_ablation_directions();
Outcome c7_replay_properties();
Outcome c8_determinism();

/// Shared desk-scale experiment base configuration (small networks and
/// moderate update ratios so the full suite fits a desktop-CPU budget; the
/// library defaults stay at the reference values).
lcsac::RunConfig desk_config();

/// Scratch directory for acceptance artifacts.
std::string work_dir();

}  // namespace acceptance
