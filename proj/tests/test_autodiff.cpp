#include <doctest.h>

#include <cmath>
#include <cstring>

#include "lcsac/errors.hpp"
#include "lcsac/param_set.hpp"
#include "lcsac/rng.hpp"
#include "lcsac/tape.hpp"
#include "support/fd_check.hpp"

using namespace lcsac;
using lcsac::testing::check_gradients;

namespace {

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double lo = -2.0,
                     double hi = 2.0) {
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.numel())) == 0;
}

}  // namespace

TEST_CASE("forward op examples") {
  Tape tape;
  SUBCASE("relu") {
    Value x = tape.leaf(Tensor::vector({-1.0, 0.0, 2.0}));
    const Tensor& y = tape.value(tape.relu(x));
    CHECK(y.at(0) == 0.0);
    CHECK(y.at(1) == 0.0);
    CHECK(y.at(2) == 2.0);
  }
  SUBCASE("matmul shape law") {
    Value a = tape.leaf(Tensor::zeros({2, 3}));
    Value b = tape.leaf(Tensor::zeros({3, 1}));
    CHECK(tape.value(tape.matmul(a, b)).shape() ==
          std::vector<std::int64_t>{2, 1});
  }
  SUBCASE("log-sum-exp of identical entries") {
    Value x = tape.leaf(Tensor::vector({0.0, 0.0, 0.0}));
    CHECK(tape.value(tape.logsumexp(x, 0)).at(0) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
  SUBCASE("shape mismatch names the op and both shapes") {
    Value a = tape.leaf(Tensor::zeros({2, 3}));
    Value b = tape.leaf(Tensor::zeros({2, 2}));
    try {
      tape.add(a, b);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("add") != std::string::npos);
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[2x2]") != std::string::npos);
    }
  }
}

TEST_CASE("backward basics") {
  SUBCASE("sum gradient is all ones") {
    Tape tape;
    Value x = tape.leaf(Tensor::matrix(2, 2, {1, -3, 2, 7}));
    Gradients g = tape.backward(tape.sum(x));
    const Tensor gx = g.get(x);
    for (std::int64_t i = 0; i < gx.numel(); ++i) CHECK(gx.at(i) == 1.0);
  }
  SUBCASE("mean of squares of [1,2] has gradient [1,2]") {
    Tape tape;
    Value x = tape.leaf(Tensor::vector({1.0, 2.0}));
    Gradients g = tape.backward(tape.mean(tape.mul(x, x)));
    const Tensor gx = g.get(x);
    CHECK(gx.at(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gx.at(1) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("non-scalar root is a contract error") {
    Tape tape;
    Value x = tape.leaf(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(tape.relu(x)), ContractError);
  }
  SUBCASE("unreachable leaves get zeros") {
    Tape tape;
    Value x = tape.leaf(Tensor::vector({1.0}));
    Value y = tape.leaf(Tensor::vector({5.0}));
    Gradients g = tape.backward(tape.sum(x));
    CHECK_FALSE(g.reached(y));
    CHECK(g.get(y).at(0) == 0.0);
  }
}

TEST_CASE("every op matches central finite differences") {
  Rng rng(2024);
  const double tol = 1e-4;

  auto run = [&](const char* name, const lcsac::testing::GraphBuilder& build,
                 std::vector<Tensor> leaves) {
    CAPTURE(name);
    const auto report = check_gradients(build, std::move(leaves));
    CHECK(report.max_rel_err < tol);
  };

  for (int trial = 0; trial < 10; ++trial) {
    run("add", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.add(v[0], v[1]));
    }, {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});

    run("sub", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.mul(t.sub(v[0], v[1]), v[0]));
    }, {random_tensor({5}, rng), random_tensor({5}, rng)});

    run("mul", [](Tape& t, const std::vector<Value>& v) {
      return t.mean(t.mul(v[0], v[1]));
    }, {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});

    run("matmul", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.matmul(v[0], v[1]));
    }, {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});

    // Keep relu inputs away from the kink.
    Tensor relu_in = random_tensor({4, 3}, rng);
    for (std::int64_t i = 0; i < relu_in.numel(); ++i)
      if (std::abs(relu_in.at(i)) < 1e-2) relu_in.at(i) += 0.05;
    run("relu", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.relu(v[0]));
    }, {relu_in});

    run("tanh", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.tanh(v[0]));
    }, {random_tensor({6}, rng)});

    run("sigmoid", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.sigmoid(v[0]));
    }, {random_tensor({6}, rng)});

    run("exp", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.exp(v[0]));
    }, {random_tensor({6}, rng, -1.0, 1.0)});

    run("log", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.log(v[0]));
    }, {random_tensor({6}, rng, 0.5, 3.0)});

    run("negate", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.negate(v[0]));
    }, {random_tensor({6}, rng)});

    run("mean", [](Tape& t, const std::vector<Value>& v) {
      return t.mean(t.mul(v[0], v[0]));
    }, {random_tensor({7}, rng)});

    run("concat", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.tanh(t.concat_cols(v[0], v[1])));
    }, {random_tensor({3, 2}, rng), random_tensor({3, 3}, rng)});

    run("slice", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.mul(t.slice_cols(v[0], 1, 3), t.slice_cols(v[0], 2, 4)));
    }, {random_tensor({3, 5}, rng)});

    run("logsumexp-rows", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.logsumexp(v[0], 1));
    }, {random_tensor({3, 5}, rng)});

    run("logsumexp-cols", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.logsumexp(v[0], 0));
    }, {random_tensor({3, 5}, rng)});

    run("squared-difference", [](Tape& t, const std::vector<Value>& v) {
      return t.mean(t.squared_diff(v[0], v[1]));
    }, {random_tensor({4}, rng), random_tensor({4}, rng)});

    run("transpose", [](Tape& t, const std::vector<Value>& v) {
      return t.sum(t.matmul(t.transpose(v[0]), v[1]));
    }, {random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)});

    // Composite graph stressing reuse of intermediate nodes.
    run("composite", [](Tape& t, const std::vector<Value>& v) {
      Value h = t.tanh(t.matmul(v[0], v[1]));
      Value s = t.sigmoid(t.slice_cols(h, 0, 2));
      Value c = t.concat_cols(s, t.relu(h));
      return t.mean(t.squared_diff(c, t.scale(c, 0.5)));
    }, {random_tensor({2, 3}, rng), random_tensor({3, 4}, rng)});
  }
}

TEST_CASE("sugar helpers behave as their definitions") {
  Tape tape;
  Value a = tape.leaf(Tensor::vector({1.0, -2.0, 0.5}));
  Value b = tape.leaf(Tensor::vector({0.5, 3.0, 0.5}));
  const Tensor& mn = tape.value(tape.minimum(a, b));
  CHECK(mn.at(0) == 0.5);
  CHECK(mn.at(1) == -2.0);
  CHECK(mn.at(2) == 0.5);

  const Tensor& cl = tape.value(tape.clamp(a, -1.0, 0.75));
  CHECK(cl.at(0) == 0.75);
  CHECK(cl.at(1) == -1.0);
  CHECK(cl.at(2) == 0.5);

  Value m = tape.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const Tensor& d = tape.value(tape.diag_col(m));
  CHECK(d.at(0) == 1.0);
  CHECK(d.at(1) == 4.0);

  const Tensor& rs = tape.value(tape.row_sum(m));
  CHECK(rs.at(0) == 3.0);
  CHECK(rs.at(1) == 7.0);
}

TEST_CASE("backward is repeatable and forward is bit-deterministic") {
  Rng rng(9);
  Tensor in0 = random_tensor({4, 3}, rng);
  Tensor in1 = random_tensor({3, 5}, rng);

  auto build = [&](Tape& t, Value& leaf0) {
    leaf0 = t.leaf(in0);
    Value w = t.leaf(in1);
    return t.mean(t.tanh(t.matmul(leaf0, w)));
  };

  Tape tape;
  Value leaf0;
  Value root = build(tape, leaf0);

  Gradients g1 = tape.backward(root);
  Gradients g2 = tape.backward(root);
  CHECK(bit_equal(g1.get(leaf0), g2.get(leaf0)));

  Tape tape2;
  Value leaf0b;
  Value root2 = build(tape2, leaf0b);
  CHECK(bit_equal(tape.value(root), tape2.value(root2)));
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParamSet ps;
    ps.add("w", Tensor::vector({1.0, -2.0}));
    AdamState state;
    sgd_adam_step(ps, {Tensor::zeros({2})}, state, 3e-4);
    CHECK(ps["w"].at(0) == 1.0);
    CHECK(ps["w"].at(1) == -2.0);
  }

  SUBCASE("first step moves against the gradient with magnitude ~lr") {
    ParamSet ps;
    ps.add("w", Tensor::vector({0.0, 0.0}));
    AdamState state;
    const double lr = 1e-2;
    sgd_adam_step(ps, {Tensor::vector({0.3, -5.0})}, state, lr);
    // Bias-corrected first step: -lr * g / (|g| + eps) = -lr * sign(g).
    CHECK(ps["w"].at(0) == doctest::Approx(-lr).epsilon(1e-6));
    CHECK(ps["w"].at(1) == doctest::Approx(lr).epsilon(1e-6));
  }

  SUBCASE("10-step trajectory matches straight-line reference to 1e-12") {
    // Independent scalar Adam on f(x) = 0.5 * x^2 (gradient x).
    const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double x_ref = 1.7, m = 0.0, v = 0.0;
    ParamSet ps;
    ps.add("x", Tensor::vector({1.7}));
    AdamState state;
    for (int t = 1; t <= 10; ++t) {
      const double g_ref = x_ref;
      m = b1 * m + (1 - b1) * g_ref;
      v = b2 * v + (1 - b2) * g_ref * g_ref;
      const double mhat = m / (1 - std::pow(b1, t));
      const double vhat = v / (1 - std::pow(b2, t));
      x_ref -= lr * mhat / (std::sqrt(vhat) + eps);

      sgd_adam_step(ps, {Tensor::vector({ps["x"].at(0)})}, state, lr);
      CHECK(ps["x"].at(0) == doctest::Approx(x_ref).epsilon(1e-12));
    }
  }

  SUBCASE("shape mismatch is an error") {
    ParamSet ps;
    ps.add("w", Tensor::vector({1.0, 2.0}));
    AdamState state;
    CHECK_THROWS_AS(sgd_adam_step(ps, {Tensor::vector({1.0})}, state, 1e-3),
                    DimensionError);
  }
}

TEST_CASE("constant leaves receive no gradient accumulation") {
  Tape tape;
  Value x = tape.leaf(Tensor::vector({2.0}));
  Value c = tape.constant(Tensor::vector({3.0}));
  Gradients g = tape.backward(tape.sum(tape.mul(x, c)));
  CHECK(g.get(x).at(0) == 3.0);
  CHECK_FALSE(g.reached(c));
}
