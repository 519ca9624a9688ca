#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "lcsac/param_set.hpp"

namespace lcsac {

/// Versioned on-disk snapshot of named parameter sets (policy, critics,
/// targets, encoder). JSON with a format/version header; tensor values are
/// written with exact round-trip precision.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::map<std::string, ParamSet> sections;
  std::int64_t env_step = 0;
  std::uint64_t config_hash = 0;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace lcsac
