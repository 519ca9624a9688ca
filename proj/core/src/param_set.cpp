#include "lcsac/param_set.hpp"

#include <cmath>

#include "lcsac/errors.hpp"
#include "lcsac/tape.hpp"

namespace lcsac {

int ParamSet::add(std::string name, Tensor value) {
  if (index_of(name) >= 0)
    throw ContractError("ParamSet: duplicate parameter name '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return static_cast<int>(names_.size() - 1);
}

int ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

Tensor& ParamSet::operator[](std::string_view name) {
  const int i = index_of(name);
  if (i < 0)
    throw ContractError("ParamSet: no parameter named '" + std::string(name) +
                        "'");
  return values_[static_cast<std::size_t>(i)];
}

const Tensor& ParamSet::operator[](std::string_view name) const {
  const int i = index_of(name);
  if (i < 0)
    throw ContractError("ParamSet: no parameter named '" + std::string(name) +
                        "'");
  return values_[static_cast<std::size_t>(i)];
}

std::int64_t ParamSet::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& t : values_) n += t.numel();
  return n;
}

bool ParamSet::congruent(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (names_[i] != other.names_[i] ||
        !values_[i].same_shape(other.values_[i]))
      return false;
  return true;
}

BoundParams bind_params(Tape& tape, const ParamSet& params) {
  BoundParams bound;
  bound.leaf_ids.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    bound.leaf_ids.push_back(tape.leaf(params.at(i)).id);
  return bound;
}

BoundParams bind_params_const(Tape& tape, const ParamSet& params) {
  BoundParams bound;
  bound.leaf_ids.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    bound.leaf_ids.push_back(tape.constant(params.at(i)).id);
  return bound;
}

void sgd_adam_step(ParamSet& params, const std::vector<Tensor>& grads,
                   AdamState& state, double lr, const AdamConfig& config) {
  if (grads.size() != params.size())
    throw DimensionError("adam: gradient count " +
                         std::to_string(grads.size()) +
                         " does not match parameter count " +
                         std::to_string(params.size()));
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m.push_back(Tensor::zeros(params.at(i).shape()));
      state.v.push_back(Tensor::zeros(params.at(i).shape()));
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.at(i);
    const Tensor& g = grads[i];
    if (!p.same_shape(g))
      throw DimensionError("adam: parameter '" + params.name(i) + "' shape " +
                           p.shape_str() + " vs gradient shape " +
                           g.shape_str());
    double* pm = state.m[i].data();
    double* pv = state.v[i].data();
    double* pp = p.data();
    const double* pg = g.data();
    for (std::int64_t j = 0; j < p.numel(); ++j) {
      pm[j] = config.beta1 * pm[j] + (1.0 - config.beta1) * pg[j];
      pv[j] = config.beta2 * pv[j] + (1.0 - config.beta2) * pg[j] * pg[j];
      const double mhat = pm[j] / bc1;
      const double vhat = pv[j] / bc2;
      pp[j] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

void polyak_update(ParamSet& target, const ParamSet& current, double tau) {
  if (!target.congruent(current))
    throw DimensionError(
        "polyak_update: target and current parameter sets are not congruent");
  for (std::size_t i = 0; i < target.size(); ++i) {
    double* pt = target.at(i).data();
    const double* pc = current.at(i).data();
    for (std::int64_t j = 0; j < target.at(i).numel(); ++j)
      pt[j] = tau * pc[j] + (1.0 - tau) * pt[j];
  }
}

}  // namespace lcsac
