#pragma once

#include <string>

namespace lcsac {

/// Writes `content` to `path` atomically: the bytes go to a temp file in the
/// same directory which is then renamed over the target, so readers never see
/// a truncated file. Parent directories are created as needed.
void write_file_atomic(const std::string& path, const std::string& content);

/// Reads a whole file; throws IoError naming the path if it cannot be opened.
std::string read_file(const std::string& path);

/// Creates a directory (and parents); no-op if it exists.
void ensure_dir(const std::string& path);

/// Shortest-round-trip decimal rendering of a double ("0.2", "1e-06", ...).
/// Stable across runs of the same binary, used for all CSV/JSON numbers the
/// byte-identity guarantees cover.
std::string format_double(double v);

}  // namespace lcsac
