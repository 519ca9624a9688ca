#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "lcsac/rng.hpp"

namespace lcsac {

/// One experience step: (s, a, r, s', done). Vector widths are fixed per
/// buffer lifetime.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

/// RL training tuple with context vectors frozen at collection time. The
/// stored c / c_next are never recomputed; the buffer hashes them on push and
/// re-verifies on sample.
struct RlTuple {
  std::vector<double> c;
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  std::vector<double> c_next;
  bool done = false;
};

/// Batch of contiguous within-episode trajectory segments. Each segment has
/// exactly `segment_len` consecutive transitions from one episode; a done
/// flag may appear only at a segment's final position.
struct SegmentBatch {
  std::int64_t segment_len = 0;
  std::vector<std::vector<Transition>> segments;
  /// Global index of each segment's first transition (audit trail).
  std::vector<std::int64_t> source_indices;
};

/// FIFO ring buffer of raw transitions with episode-boundary bookkeeping
/// (the encoder-training buffer). Episode ends are tracked as global push
/// indices; entries overwritten by wraparound are pruned, and episodes whose
/// start has been overwritten are excluded from segment sampling entirely.
class ContextBuffer {
 public:
  ContextBuffer(std::int64_t capacity, std::int64_t s_dim, std::int64_t a_dim);

  void push(const Transition& t);

  std::int64_t capacity() const { return capacity_; }
  std::int64_t size() const;
  std::int64_t total_pushed() const { return count_; }
  std::int64_t state_dim() const { return s_dim_; }
  std::int64_t action_dim() const { return a_dim_; }

  /// Global indices (still resident) of entries pushed with done=true, in
  /// insertion order.
  std::vector<std::int64_t> episode_end_indices() const;

  /// Number of length-l windows eligible for sampling right now.
  std::int64_t valid_window_count(std::int64_t l) const;

  /// n segments drawn uniformly (with replacement) over all valid windows.
  /// Throws InsufficientDataError when no valid window exists.
  SegmentBatch sample_segments(std::int64_t n, std::int64_t l, Rng& rng) const;

  /// Transition at a global push index; throws if it has been overwritten.
  Transition get(std::int64_t global_index) const;

  void save(const std::string& path) const;
  static ContextBuffer load(const std::string& path);

 private:
  struct Episode {
    std::int64_t start;
    std::int64_t end;  // global index of the done=true entry, inclusive
  };

  std::int64_t oldest_resident() const;
  /// Eligible (start, window_count) pairs for length-l sampling.
  std::vector<std::pair<std::int64_t, std::int64_t>> window_spans(
      std::int64_t l) const;

  std::int64_t capacity_;
  std::int64_t s_dim_;
  std::int64_t a_dim_;
  std::int64_t count_ = 0;  // total pushes ever; slot = index % capacity
  std::vector<double> s_;
  std::vector<double> a_;
  std::vector<double> r_;
  std::vector<double> s_next_;
  std::vector<std::uint8_t> done_;
  std::deque<Episode> completed_;
  std::int64_t current_start_ = 0;
};

/// FIFO ring buffer of RL tuples (the critic/policy training buffer).
/// Sampling is uniform with replacement.
class RlBuffer {
 public:
  RlBuffer(std::int64_t capacity, std::int64_t c_dim, std::int64_t s_dim,
           std::int64_t a_dim);

  void push(const RlTuple& t);

  std::int64_t capacity() const { return capacity_; }
  std::int64_t size() const;
  std::int64_t total_pushed() const { return count_; }
  std::int64_t context_dim() const { return c_dim_; }

  /// n uniform draws with replacement. Throws InsufficientDataError on an
  /// empty buffer. Verifies the stored context hash of every sampled row.
  std::vector<RlTuple> sample(std::int64_t n, Rng& rng) const;

  RlTuple get(std::int64_t global_index) const;

  void save(const std::string& path) const;
  static RlBuffer load(const std::string& path);

 private:
  RlTuple read_slot(std::int64_t slot) const;

  std::int64_t capacity_;
  std::int64_t c_dim_;
  std::int64_t s_dim_;
  std::int64_t a_dim_;
  std::int64_t count_ = 0;
  std::vector<double> c_;
  std::vector<double> s_;
  std::vector<double> a_;
  std::vector<double> r_;
  std::vector<double> s_next_;
  std::vector<double> c_next_;
  std::vector<std::uint8_t> done_;
  std::vector<std::uint64_t> c_hash_;
};

}  // namespace lcsac
