#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "lcsac/errors.hpp"
#include "lcsac/replay.hpp"
#include "support/list_model.hpp"

using namespace lcsac;
using lcsac::testing::ListModelBuffer;

namespace {

Transition make_transition(double tag, bool done = false) {
  Transition t;
  t.s = {tag, tag + 0.5};
  t.a = {-tag};
  t.r = tag * 10.0;
  t.s_next = {tag + 1.0, tag + 1.5};
  t.done = done;
  return t;
}

/// Push `len` transitions forming one episode (done on the last).
void push_episode(ContextBuffer& buf, std::int64_t len, double tag0) {
  for (std::int64_t i = 0; i < len; ++i)
    buf.push(make_transition(tag0 + static_cast<double>(i), i == len - 1));
}

}  // namespace

TEST_CASE("context buffer episode bookkeeping") {
  SUBCASE("done on the 5th push records episode end [4]") {
    ContextBuffer buf(100, 2, 1);
    for (int i = 0; i < 5; ++i) buf.push(make_transition(i, i == 4));
    CHECK(buf.episode_end_indices() == std::vector<std::int64_t>{4});
  }

  SUBCASE("FIFO overwrite keeps size at capacity") {
    ContextBuffer buf(4, 2, 1);
    for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
    CHECK(buf.size() == 4);
    CHECK_THROWS_AS(buf.get(0), ContractError);
    CHECK(buf.get(1).s[0] == 1.0);
    CHECK(buf.get(4).s[0] == 4.0);
  }

  SUBCASE("wraparound past a recorded episode end prunes it") {
    ContextBuffer buf(4, 2, 1);
    buf.push(make_transition(0));
    buf.push(make_transition(1, true));  // end at global index 1
    CHECK(buf.episode_end_indices() == std::vector<std::int64_t>{1});
    for (int i = 2; i < 6; ++i) buf.push(make_transition(i));
    CHECK(buf.episode_end_indices().empty());
  }

  SUBCASE("width mismatch is an error") {
    ContextBuffer buf(4, 2, 1);
    Transition bad = make_transition(0);
    bad.s = {1.0};
    CHECK_THROWS_AS(buf.push(bad), DimensionError);
  }
}

TEST_CASE("segment sampling") {
  Rng rng(77);

  SUBCASE("single episode of exactly length l yields only that window") {
    ContextBuffer buf(100, 2, 1);
    push_episode(buf, 20, 0.0);
    CHECK(buf.valid_window_count(20) == 1);
    SegmentBatch batch = buf.sample_segments(8, 20, rng);
    for (std::int64_t src : batch.source_indices) CHECK(src == 0);
    CHECK(batch.segments[0].front().s[0] == 0.0);
    CHECK(batch.segments[0].back().done);
  }

  SUBCASE("episodes shorter than l are insufficient") {
    ContextBuffer buf(100, 2, 1);
    push_episode(buf, 19, 0.0);
    push_episode(buf, 19, 100.0);
    CHECK(buf.valid_window_count(20) == 0);
    CHECK_THROWS_AS(buf.sample_segments(4, 20, rng), InsufficientDataError);
  }

  SUBCASE("uniformity over valid windows (chi-square, p > 0.01)") {
    ContextBuffer buf(1000, 2, 1);
    push_episode(buf, 25, 0.0);
    push_episode(buf, 30, 100.0);
    push_episode(buf, 22, 200.0);
    const std::int64_t l = 20;
    // Windows per episode: 6, 11, 3 -> 20 total.
    CHECK(buf.valid_window_count(l) == 20);

    std::map<std::int64_t, std::int64_t> counts;
    const std::int64_t draws = 100000;
    SegmentBatch batch = buf.sample_segments(draws, l, rng);
    for (std::int64_t src : batch.source_indices) counts[src] += 1;
    CHECK(counts.size() == 20);

    const double expected = static_cast<double>(draws) / 20.0;
    double chi2 = 0.0;
    for (const auto& [src, n] : counts) {
      const double d = static_cast<double>(n) - expected;
      chi2 += d * d / expected;
    }
    // chi-square critical value at p = 0.01, df = 19.
    CHECK(chi2 < 36.1909);
  }

  SUBCASE("no sampled segment crosses an episode boundary or holds an early done") {
    ContextBuffer buf(512, 2, 1);
    Rng episodes_rng(5);
    double tag = 0.0;
    for (int e = 0; e < 40; ++e) {
      push_episode(buf, 5 + episodes_rng.uniform_int(30), tag);
      tag += 1000.0;
    }
    SegmentBatch batch = buf.sample_segments(2000, 8, rng);
    for (const auto& seg : batch.segments) {
      for (std::size_t j = 0; j + 1 < seg.size(); ++j) CHECK_FALSE(seg[j].done);
      // Consecutive environment steps share the episode tag and step by 1.
      for (std::size_t j = 0; j + 1 < seg.size(); ++j)
        CHECK(seg[j + 1].s[0] == doctest::Approx(seg[j].s[0] + 1.0));
    }
  }
}

TEST_CASE("context buffer matches the list-model oracle on random sequences") {
  Rng rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    const std::int64_t capacity = 16 + rng.uniform_int(48);
    ContextBuffer buf(capacity, 2, 1);
    ListModelBuffer model(capacity);
    const std::int64_t l = 3 + rng.uniform_int(5);

    double tag = 0.0;
    for (int op = 0; op < 1500; ++op) {
      const bool done = rng.uniform() < 0.08;
      Transition t = make_transition(tag, done);
      tag += 1.0;
      buf.push(t);
      model.push(t);

      REQUIRE(buf.size() == model.size());
      REQUIRE(buf.episode_end_indices() == model.episode_end_indices());

      const auto starts = model.valid_window_starts(l);
      REQUIRE(buf.valid_window_count(l) ==
              static_cast<std::int64_t>(starts.size()));

      // Resident contents agree.
      if (op % 97 == 0) {
        for (std::int64_t g = model.oldest_resident(); g < model.count(); ++g) {
          const Transition got = buf.get(g);
          const Transition& want = model.get(g);
          REQUIRE(got.s == want.s);
          REQUIRE(got.done == want.done);
        }
      }
    }

    // Sampled windows land exactly on the model's valid set.
    const auto starts = model.valid_window_starts(l);
    if (!starts.empty()) {
      const std::set<std::int64_t> valid(starts.begin(), starts.end());
      SegmentBatch batch = buf.sample_segments(500, l, rng);
      for (std::int64_t src : batch.source_indices)
        REQUIRE(valid.count(src) == 1);
    }
  }
}

TEST_CASE("rl buffer") {
  Rng rng(9);
  auto make_tuple = [](double tag, bool done = false) {
    RlTuple t;
    t.c = {tag * 0.1, -tag * 0.1};
    t.s = {tag, tag + 0.5};
    t.a = {-tag};
    t.r = tag;
    t.s_next = {tag + 1.0, tag + 1.5};
    t.c_next = {tag * 0.2, -tag * 0.2};
    t.done = done;
    return t;
  };

  SUBCASE("round-trip: pushed tuple equals sampled tuple fieldwise") {
    RlBuffer buf(8, 2, 2, 1);
    const RlTuple pushed = make_tuple(3.0, true);
    buf.push(pushed);
    const auto batch = buf.sample(4, rng);
    for (const RlTuple& t : batch) {
      CHECK(t.c == pushed.c);
      CHECK(t.s == pushed.s);
      CHECK(t.a == pushed.a);
      CHECK(t.r == pushed.r);
      CHECK(t.s_next == pushed.s_next);
      CHECK(t.c_next == pushed.c_next);
      CHECK(t.done == pushed.done);
    }
  }

  SUBCASE("FIFO overwrite") {
    RlBuffer buf(4, 2, 2, 1);
    for (int i = 0; i < 6; ++i) buf.push(make_tuple(i));
    CHECK(buf.size() == 4);
    CHECK(buf.get(2).s[0] == 2.0);
    CHECK_THROWS_AS(buf.get(1), ContractError);
  }

  SUBCASE("empty buffer raises insufficient data") {
    RlBuffer buf(4, 2, 2, 1);
    CHECK_THROWS_AS(buf.sample(1, rng), InsufficientDataError);
  }

  SUBCASE("per-entry sampling frequency is uniform within 3 sigma") {
    RlBuffer buf(16, 2, 2, 1);
    for (int i = 0; i < 10; ++i) buf.push(make_tuple(i));
    std::map<double, std::int64_t> counts;
    const std::int64_t draws = 100000;
    for (const RlTuple& t : buf.sample(draws, rng)) counts[t.s[0]] += 1;
    const double p = 0.1;
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& [tag, n] : counts)
      CHECK(std::abs(static_cast<double>(n) - draws * p) < 3.0 * sigma);
  }

  SUBCASE("seeded generator reproduces the index sequence") {
    RlBuffer buf(16, 2, 2, 1);
    for (int i = 0; i < 10; ++i) buf.push(make_tuple(i));
    Rng r1(5), r2(5);
    const auto b1 = buf.sample(50, r1);
    const auto b2 = buf.sample(50, r2);
    for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i].s == b2[i].s);
  }

  SUBCASE("context dim 0 is supported (plain SAC reduction)") {
    RlBuffer buf(8, 0, 2, 1);
    RlTuple t = make_tuple(1.0);
    t.c.clear();
    t.c_next.clear();
    buf.push(t);
    const auto batch = buf.sample(2, rng);
    CHECK(batch[0].c.empty());
    CHECK(batch[0].s[0] == 1.0);
  }
}

TEST_CASE("buffer snapshots round-trip through disk") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "lcsac_replay_test").string();
  fs::create_directories(dir);
  Rng rng(10);

  ContextBuffer buf(32, 2, 1);
  push_episode(buf, 25, 0.0);
  push_episode(buf, 12, 100.0);
  buf.save(dir + "/ctx.json");
  ContextBuffer loaded = ContextBuffer::load(dir + "/ctx.json");
  CHECK(loaded.size() == buf.size());
  CHECK(loaded.episode_end_indices() == buf.episode_end_indices());
  CHECK(loaded.valid_window_count(10) == buf.valid_window_count(10));
  for (std::int64_t g = buf.total_pushed() - buf.size();
       g < buf.total_pushed(); ++g)
    CHECK(loaded.get(g).s == buf.get(g).s);

  RlBuffer rl(16, 2, 2, 1);
  for (int i = 0; i < 20; ++i) {
    RlTuple t;
    t.c = {0.1 * i, 0.2};
    t.s = {double(i), 0.0};
    t.a = {0.5};
    t.r = i;
    t.s_next = {double(i + 1), 0.0};
    t.c_next = {0.1 * i, 0.3};
    t.done = (i % 7 == 0);
    rl.push(t);
  }
  rl.save(dir + "/rl.json");
  RlBuffer rl2 = RlBuffer::load(dir + "/rl.json");
  CHECK(rl2.size() == rl.size());
  for (std::int64_t g = rl.total_pushed() - rl.size(); g < rl.total_pushed();
       ++g) {
    CHECK(rl2.get(g).s == rl.get(g).s);
    CHECK(rl2.get(g).c == rl.get(g).c);
  }
  fs::remove_all(dir);
}
