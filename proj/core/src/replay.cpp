#include "lcsac/replay.hpp"

#include <algorithm>
#include <json.hpp>

#include "lcsac/errors.hpp"
#include "lcsac/io.hpp"

namespace lcsac {

using nlohmann::json;

namespace {

void check_width(const char* what, std::size_t got, std::int64_t want) {
  if (static_cast<std::int64_t>(got) != want)
    throw DimensionError(std::string(what) + ": width " + std::to_string(got) +
                         " does not match buffer schema width " +
                         std::to_string(want));
}

std::uint64_t hash_context(const std::vector<double>& c,
                           const std::vector<double>& c_next) {
  std::uint64_t h = fnv1a64(c.data(), c.size() * sizeof(double));
  return fnv1a64(c_next.data(), c_next.size() * sizeof(double), h);
}

}  // namespace

// ---------------------------------------------------------------------------
// ContextBuffer
// ---------------------------------------------------------------------------

ContextBuffer::ContextBuffer(std::int64_t capacity, std::int64_t s_dim,
                             std::int64_t a_dim)
    : capacity_(capacity), s_dim_(s_dim), a_dim_(a_dim) {
  if (capacity <= 0) throw ConfigError("ContextBuffer: capacity must be > 0");
  if (s_dim <= 0 || a_dim <= 0)
    throw ConfigError("ContextBuffer: state/action dims must be > 0");
}

std::int64_t ContextBuffer::size() const {
  return std::min(count_, capacity_);
}

std::int64_t ContextBuffer::oldest_resident() const {
  return std::max<std::int64_t>(0, count_ - capacity_);
}

void ContextBuffer::push(const Transition& t) {
  check_width("push_transition(s)", t.s.size(), s_dim_);
  check_width("push_transition(a)", t.a.size(), a_dim_);
  check_width("push_transition(s_next)", t.s_next.size(), s_dim_);

  const std::int64_t idx = count_;
  const std::int64_t slot = idx % capacity_;
  if (slot >= static_cast<std::int64_t>(done_.size())) {
    // Grow geometrically up to capacity instead of reserving it all upfront.
    const std::int64_t rows = std::min(
        capacity_, std::max<std::int64_t>({slot + 1, 1024,
                                           2 * static_cast<std::int64_t>(
                                                   done_.size())}));
    s_.resize(static_cast<std::size_t>(rows * s_dim_));
    a_.resize(static_cast<std::size_t>(rows * a_dim_));
    r_.resize(static_cast<std::size_t>(rows));
    s_next_.resize(static_cast<std::size_t>(rows * s_dim_));
    done_.resize(static_cast<std::size_t>(rows));
  }
  std::copy(t.s.begin(), t.s.end(), s_.begin() + slot * s_dim_);
  std::copy(t.a.begin(), t.a.end(), a_.begin() + slot * a_dim_);
  r_[static_cast<std::size_t>(slot)] = t.r;
  std::copy(t.s_next.begin(), t.s_next.end(), s_next_.begin() + slot * s_dim_);
  done_[static_cast<std::size_t>(slot)] = t.done ? 1 : 0;
  count_ += 1;

  if (t.done) {
    completed_.push_back({current_start_, idx});
    current_start_ = idx + 1;
  }
  // Prune episode ends whose entry has been overwritten.
  const std::int64_t oldest = oldest_resident();
  while (!completed_.empty() && completed_.front().end < oldest)
    completed_.pop_front();
}

std::vector<std::int64_t> ContextBuffer::episode_end_indices() const {
  std::vector<std::int64_t> ends;
  ends.reserve(completed_.size());
  for (const Episode& ep : completed_) ends.push_back(ep.end);
  return ends;
}

std::vector<std::pair<std::int64_t, std::int64_t>> ContextBuffer::window_spans(
    std::int64_t l) const {
  std::vector<std::pair<std::int64_t, std::int64_t>> spans;
  const std::int64_t oldest = oldest_resident();
  // Episodes whose start was overwritten are excluded entirely rather than
  // sampled from their surviving tail.
  for (const Episode& ep : completed_) {
    if (ep.start < oldest) continue;
    const std::int64_t len = ep.end - ep.start + 1;
    if (len >= l) spans.emplace_back(ep.start, len - l + 1);
  }
  if (current_start_ >= oldest) {
    const std::int64_t len = count_ - current_start_;
    if (len >= l) spans.emplace_back(current_start_, len - l + 1);
  }
  return spans;
}

std::int64_t ContextBuffer::valid_window_count(std::int64_t l) const {
  if (l <= 0) throw ContractError("valid_window_count: l must be > 0");
  std::int64_t total = 0;
  for (const auto& [start, n] : window_spans(l)) total += n;
  return total;
}

SegmentBatch ContextBuffer::sample_segments(std::int64_t n, std::int64_t l,
                                            Rng& rng) const {
  if (n <= 0 || l <= 0)
    throw ContractError("sample_segments: n and l must be > 0");
  const auto spans = window_spans(l);
  std::int64_t total = 0;
  for (const auto& [start, count] : spans) total += count;
  if (total == 0)
    throw InsufficientDataError(
        "sample_segments: no stored episode has a full window of length " +
        std::to_string(l));

  SegmentBatch batch;
  batch.segment_len = l;
  batch.segments.reserve(static_cast<std::size_t>(n));
  batch.source_indices.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t k = rng.uniform_int(total);
    std::int64_t window_start = -1;
    for (const auto& [start, count] : spans) {
      if (k < count) {
        window_start = start + k;
        break;
      }
      k -= count;
    }
    std::vector<Transition> segment;
    segment.reserve(static_cast<std::size_t>(l));
    for (std::int64_t j = 0; j < l; ++j) segment.push_back(get(window_start + j));
    batch.segments.push_back(std::move(segment));
    batch.source_indices.push_back(window_start);
  }
  return batch;
}

Transition ContextBuffer::get(std::int64_t global_index) const {
  if (global_index < oldest_resident() || global_index >= count_)
    throw ContractError("ContextBuffer::get: index " +
                        std::to_string(global_index) + " is not resident");
  const std::int64_t slot = global_index % capacity_;
  Transition t;
  t.s.assign(s_.begin() + slot * s_dim_, s_.begin() + (slot + 1) * s_dim_);
  t.a.assign(a_.begin() + slot * a_dim_, a_.begin() + (slot + 1) * a_dim_);
  t.r = r_[static_cast<std::size_t>(slot)];
  t.s_next.assign(s_next_.begin() + slot * s_dim_,
                  s_next_.begin() + (slot + 1) * s_dim_);
  t.done = done_[static_cast<std::size_t>(slot)] != 0;
  return t;
}

void ContextBuffer::save(const std::string& path) const {
  json doc;
  doc["format"] = "lcsac-buffer";
  doc["version"] = 1;
  doc["kind"] = "context";
  doc["capacity"] = capacity_;
  doc["s_dim"] = s_dim_;
  doc["a_dim"] = a_dim_;
  doc["count"] = count_;
  doc["current_start"] = current_start_;
  json eps = json::array();
  for (const Episode& ep : completed_) eps.push_back({ep.start, ep.end});
  doc["episodes"] = std::move(eps);
  doc["s"] = s_;
  doc["a"] = a_;
  doc["r"] = r_;
  doc["s_next"] = s_next_;
  doc["done"] = done_;
  write_file_atomic(path, doc.dump());
}

ContextBuffer ContextBuffer::load(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("buffer '" + path + "': " + e.what());
  }
  if (doc.value("format", "") != "lcsac-buffer" ||
      doc.value("kind", "") != "context" || doc.value("version", -1) != 1)
    throw IoError("buffer '" + path + "': not a context-buffer snapshot");
  ContextBuffer buf(doc.at("capacity").get<std::int64_t>(),
                    doc.at("s_dim").get<std::int64_t>(),
                    doc.at("a_dim").get<std::int64_t>());
  buf.count_ = doc.at("count").get<std::int64_t>();
  buf.current_start_ = doc.at("current_start").get<std::int64_t>();
  for (const auto& ep : doc.at("episodes"))
    buf.completed_.push_back({ep[0].get<std::int64_t>(),
                              ep[1].get<std::int64_t>()});
  buf.s_ = doc.at("s").get<std::vector<double>>();
  buf.a_ = doc.at("a").get<std::vector<double>>();
  buf.r_ = doc.at("r").get<std::vector<double>>();
  buf.s_next_ = doc.at("s_next").get<std::vector<double>>();
  buf.done_ = doc.at("done").get<std::vector<std::uint8_t>>();
  return buf;
}

// ---------------------------------------------------------------------------
// RlBuffer
// ---------------------------------------------------------------------------

RlBuffer::RlBuffer(std::int64_t capacity, std::int64_t c_dim,
                   std::int64_t s_dim, std::int64_t a_dim)
    : capacity_(capacity), c_dim_(c_dim), s_dim_(s_dim), a_dim_(a_dim) {
  if (capacity <= 0) throw ConfigError("RlBuffer: capacity must be > 0");
  if (c_dim < 0 || s_dim <= 0 || a_dim <= 0)
    throw ConfigError("RlBuffer: bad dims");
}

std::int64_t RlBuffer::size() const { return std::min(count_, capacity_); }

void RlBuffer::push(const RlTuple& t) {
  check_width("push_rl_tuple(c)", t.c.size(), c_dim_);
  check_width("push_rl_tuple(s)", t.s.size(), s_dim_);
  check_width("push_rl_tuple(a)", t.a.size(), a_dim_);
  check_width("push_rl_tuple(s_next)", t.s_next.size(), s_dim_);
  check_width("push_rl_tuple(c_next)", t.c_next.size(), c_dim_);

  const std::int64_t slot = count_ % capacity_;
  if (slot >= static_cast<std::int64_t>(done_.size())) {
    const std::int64_t rows = std::min(
        capacity_, std::max<std::int64_t>({slot + 1, 1024,
                                           2 * static_cast<std::int64_t>(
                                                   done_.size())}));
    c_.resize(static_cast<std::size_t>(rows * c_dim_));
    s_.resize(static_cast<std::size_t>(rows * s_dim_));
    a_.resize(static_cast<std::size_t>(rows * a_dim_));
    r_.resize(static_cast<std::size_t>(rows));
    s_next_.resize(static_cast<std::size_t>(rows * s_dim_));
    c_next_.resize(static_cast<std::size_t>(rows * c_dim_));
    done_.resize(static_cast<std::size_t>(rows));
    c_hash_.resize(static_cast<std::size_t>(rows));
  }
  std::copy(t.c.begin(), t.c.end(), c_.begin() + slot * c_dim_);
  std::copy(t.s.begin(), t.s.end(), s_.begin() + slot * s_dim_);
  std::copy(t.a.begin(), t.a.end(), a_.begin() + slot * a_dim_);
  r_[static_cast<std::size_t>(slot)] = t.r;
  std::copy(t.s_next.begin(), t.s_next.end(), s_next_.begin() + slot * s_dim_);
  std::copy(t.c_next.begin(), t.c_next.end(), c_next_.begin() + slot * c_dim_);
  done_[static_cast<std::size_t>(slot)] = t.done ? 1 : 0;
  c_hash_[static_cast<std::size_t>(slot)] = hash_context(t.c, t.c_next);
  count_ += 1;
}

RlTuple RlBuffer::read_slot(std::int64_t slot) const {
  RlTuple t;
  t.c.assign(c_.begin() + slot * c_dim_, c_.begin() + (slot + 1) * c_dim_);
  t.s.assign(s_.begin() + slot * s_dim_, s_.begin() + (slot + 1) * s_dim_);
  t.a.assign(a_.begin() + slot * a_dim_, a_.begin() + (slot + 1) * a_dim_);
  t.r = r_[static_cast<std::size_t>(slot)];
  t.s_next.assign(s_next_.begin() + slot * s_dim_,
                  s_next_.begin() + (slot + 1) * s_dim_);
  t.c_next.assign(c_next_.begin() + slot * c_dim_,
                  c_next_.begin() + (slot + 1) * c_dim_);
  t.done = done_[static_cast<std::size_t>(slot)] != 0;
  // Context freshness: stored contexts must be byte-identical to what was
  // written at collection time.
  if (hash_context(t.c, t.c_next) != c_hash_[static_cast<std::size_t>(slot)])
    throw ContractError("RlBuffer: stored context was modified after push");
  return t;
}

std::vector<RlTuple> RlBuffer::sample(std::int64_t n, Rng& rng) const {
  if (size() == 0)
    throw InsufficientDataError("sample_rl_batch: buffer is empty");
  std::vector<RlTuple> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t slot =
        (std::max<std::int64_t>(0, count_ - capacity_) +
         rng.uniform_int(size())) %
        capacity_;
    out.push_back(read_slot(slot));
  }
  return out;
}

RlTuple RlBuffer::get(std::int64_t global_index) const {
  if (global_index < std::max<std::int64_t>(0, count_ - capacity_) ||
      global_index >= count_)
    throw ContractError("RlBuffer::get: index " +
                        std::to_string(global_index) + " is not resident");
  return read_slot(global_index % capacity_);
}

void RlBuffer::save(const std::string& path) const {
  json doc;
  doc["format"] = "lcsac-buffer";
  doc["version"] = 1;
  doc["kind"] = "rl";
  doc["capacity"] = capacity_;
  doc["c_dim"] = c_dim_;
  doc["s_dim"] = s_dim_;
  doc["a_dim"] = a_dim_;
  doc["count"] = count_;
  doc["c"] = c_;
  doc["s"] = s_;
  doc["a"] = a_;
  doc["r"] = r_;
  doc["s_next"] = s_next_;
  doc["c_next"] = c_next_;
  doc["done"] = done_;
  doc["c_hash"] = c_hash_;
  write_file_atomic(path, doc.dump());
}

RlBuffer RlBuffer::load(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("buffer '" + path + "': " + e.what());
  }
  if (doc.value("format", "") != "lcsac-buffer" ||
      doc.value("kind", "") != "rl" || doc.value("version", -1) != 1)
    throw IoError("buffer '" + path + "': not an rl-buffer snapshot");
  RlBuffer buf(doc.at("capacity").get<std::int64_t>(),
               doc.at("c_dim").get<std::int64_t>(),
               doc.at("s_dim").get<std::int64_t>(),
               doc.at("a_dim").get<std::int64_t>());
  buf.count_ = doc.at("count").get<std::int64_t>();
  buf.c_ = doc.at("c").get<std::vector<double>>();
  buf.s_ = doc.at("s").get<std::vector<double>>();
  buf.a_ = doc.at("a").get<std::vector<double>>();
  buf.r_ = doc.at("r").get<std::vector<double>>();
  buf.s_next_ = doc.at("s_next").get<std::vector<double>>();
  buf.c_next_ = doc.at("c_next").get<std::vector<double>>();
  buf.done_ = doc.at("done").get<std::vector<std::uint8_t>>();
  buf.c_hash_ = doc.at("c_hash").get<std::vector<std::uint64_t>>();
  return buf;
}

}  // namespace lcsac
