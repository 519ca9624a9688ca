#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lcsac {

class Rng;

/// Dense tensor of 64-bit reals in row-major order. Rank 1 and 2 cover every
/// structure in the system (vectors, batches, weight matrices); a scalar is a
/// rank-1 tensor with a single element. There is no broadcasting anywhere:
/// every shape change is an explicit operation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, double v);
  /// Rank-1 tensor from values.
  static Tensor vector(std::vector<double> values);
  /// Rank-2 tensor from row-major values; values.size() must equal r*c.
  static Tensor matrix(std::int64_t r, std::int64_t c,
                       std::vector<double> values);
  /// Elementwise uniform draws in [lo, hi).
  static Tensor uniform(std::vector<std::int64_t> shape, Rng& rng, double lo,
                        double hi);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  int rank() const { return static_cast<int>(shape_.size()); }
  bool is_scalar() const { return numel() == 1; }

  /// Rows/cols of a rank-2 tensor (rank-1 is treated as a single row).
  std::int64_t rows() const;
  std::int64_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& at(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(std::int64_t r, std::int64_t c) {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }
  double at(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  /// Throws NumericError naming `what` if any entry is NaN or infinite.
  void require_finite(std::string_view what) const;

  std::string shape_str() const;

 private:
  Tensor(std::vector<std::int64_t> shape, std::vector<double> data);

  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

/// "[2x3]" style rendering used in dimension errors.
std::string shape_to_string(const std::vector<std::int64_t>& shape);

}  // namespace lcsac
