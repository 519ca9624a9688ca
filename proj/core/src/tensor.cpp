#include "lcsac/tensor.hpp"

#include <cmath>
#include <numeric>

#include "lcsac/errors.hpp"
#include "lcsac/rng.hpp"

namespace lcsac {
namespace {

std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
  if (shape.empty())
    throw DimensionError("tensor shape must have at least one extent");
  std::int64_t n = 1;
  for (std::int64_t e : shape) {
    if (e <= 0)
      throw DimensionError("tensor extents must be positive, got " +
                           shape_to_string(shape));
    n *= e;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  const auto n = checked_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double v) {
  const auto n = checked_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::vector(std::vector<double> values) {
  if (values.empty()) throw DimensionError("vector tensor must not be empty");
  const auto n = static_cast<std::int64_t>(values.size());
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::int64_t r, std::int64_t c,
                      std::vector<double> values) {
  checked_numel({r, c});
  if (static_cast<std::int64_t>(values.size()) != r * c)
    throw DimensionError("matrix data length " +
                         std::to_string(values.size()) +
                         " does not match shape " + shape_to_string({r, c}));
  return Tensor({r, c}, std::move(values));
}

Tensor Tensor::uniform(std::vector<std::int64_t> shape, Rng& rng, double lo,
                       double hi) {
  const auto n = checked_numel(shape);
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data));
}

std::int64_t Tensor::rows() const { return rank() == 2 ? shape_[0] : 1; }

std::int64_t Tensor::cols() const {
  return rank() == 2 ? shape_[1] : shape_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::require_finite(std::string_view what) const {
  if (!all_finite())
    throw NumericError("non-finite value in " + std::string(what));
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

}  // namespace lcsac
