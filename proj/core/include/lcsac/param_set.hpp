#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcsac/tensor.hpp"

namespace lcsac {

class Tape;
struct Value;

/// Flat, ordered collection of named parameter tensors. Every network in the
/// system (policy, critics, targets, encoder) stores its weights in one of
/// these, so the optimizer, Polyak averaging and checkpointing all work on a
/// single representation. Order is insertion order and is deterministic.
class ParamSet {
 public:
  /// Adds a parameter; the name must be unique within the set.
  int add(std::string name, Tensor value);

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& at(std::size_t i) { return values_[i]; }
  const Tensor& at(std::size_t i) const { return values_[i]; }
  /// Index of `name`, or -1.
  int index_of(std::string_view name) const;
  Tensor& operator[](std::string_view name);
  const Tensor& operator[](std::string_view name) const;

  /// Total number of scalar parameters.
  std::int64_t scalar_count() const;
  /// True if the two sets have identical names and shapes, in order.
  bool congruent(const ParamSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Parameters bound onto a tape as differentiable leaves, aligned with the
/// ParamSet order. Built fresh per update step.
struct BoundParams {
  std::vector<int> leaf_ids;
};

/// Inserts every tensor of `params` as a leaf on `tape`.
BoundParams bind_params(Tape& tape, const ParamSet& params);

/// Same, but as constants: forwards run normally and backward skips them.
BoundParams bind_params_const(Tape& tape, const ParamSet& params);

/// Adam first/second-moment state, aligned with a ParamSet.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam update. `grads` must be aligned with `params` (one tensor per
/// parameter, same shapes); `state` is created lazily on the first call and
/// updated in place. Throws DimensionError on shape mismatch.
void sgd_adam_step(ParamSet& params, const std::vector<Tensor>& grads,
                   AdamState& state, double lr,
                   const AdamConfig& config = {});

/// target <- tau * current + (1 - tau) * target, elementwise. The two sets
/// must be congruent (same names, same shapes).
void polyak_update(ParamSet& target, const ParamSet& current, double tau);

}  // namespace lcsac
