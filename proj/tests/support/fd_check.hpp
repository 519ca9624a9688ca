#pragma once

// Central finite-difference gradient checker. Rebuilds the forward graph per
// perturbed component, so builders must be pure functions of their leaves.

#include <functional>
#include <vector>

#include "lcsac/tape.hpp"

namespace lcsac::testing {

using GraphBuilder =
    std::function<Value(Tape&, const std::vector<Value>& leaves)>;

struct FdReport {
  double max_rel_err = 0.0;
  std::int64_t components = 0;
};

inline double fd_rel_err(double analytic, double numeric) {
  const double scale =
      std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

/// Compares analytic gradients of `build`'s scalar output against central
/// finite differences for every component of every leaf.
inline FdReport check_gradients(const GraphBuilder& build,
                                std::vector<Tensor> leaves,
                                double h = 1e-5) {
  Tape tape;
  std::vector<Value> bound;
  bound.reserve(leaves.size());
  for (const auto& t : leaves) bound.push_back(tape.leaf(t));
  const Value root = build(tape, bound);
  const Gradients grads = tape.backward(root);

  auto eval = [&](const std::vector<Tensor>& inputs) {
    Tape t2;
    std::vector<Value> b2;
    b2.reserve(inputs.size());
    for (const auto& t : inputs) b2.push_back(t2.leaf(t));
    return t2.value(build(t2, b2)).at(0);
  };

  FdReport report;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const Tensor analytic = grads.get(bound[li]);
    for (std::int64_t j = 0; j < leaves[li].numel(); ++j) {
      std::vector<Tensor> plus = leaves;
      std::vector<Tensor> minus = leaves;
      plus[li].at(j) += h;
      minus[li].at(j) -= h;
      const double numeric = (eval(plus) - eval(minus)) / (2.0 * h);
      report.max_rel_err =
          std::max(report.max_rel_err, fd_rel_err(analytic.at(j), numeric));
      report.components += 1;
    }
  }
  return report;
}

}  // namespace lcsac::testing
