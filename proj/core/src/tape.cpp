#include "lcsac/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcsac/errors.hpp"

namespace lcsac {
namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a,
                              const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       a.shape_str() + " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw DimensionError(std::string(op) + ": unsupported shape " +
                       a.shape_str());
}

// C += A[m,k] * B[k,n]
void matmul_nn_acc(const double* a, const double* b, double* c,
                   std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A[m,n] * B[k,n]^T  (i.e. C[i,kk] += dot(A row i, B row kk))
void matmul_nt_acc(const double* a, const double* b, double* c,
                   std::int64_t m, std::int64_t n, std::int64_t k) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double* brow = b + kk * n;
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[kk] += acc;
    }
  }
}

// C += A[m,k]^T * B[m,n]  (C is [k,n])
void matmul_tn_acc(const double* a, const double* b, double* c,
                   std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      double* crow = c + kk * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor Gradients::get(Value v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= grads_.size())
    throw ContractError("Gradients::get: invalid node id");
  const Tensor& g = grads_[static_cast<std::size_t>(v.id)];
  if (g.numel() > 0) return g;
  return Tensor::zeros(tape_->value(v).shape());
}

bool Gradients::reached(Value v) const {
  return v.id >= 0 && static_cast<std::size_t>(v.id) < grads_.size() &&
         grads_[static_cast<std::size_t>(v.id)].numel() > 0;
}

Value Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Value{static_cast<int>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Value v) const {
  return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::check_valid(Value v, const char* op) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ContractError(std::string(op) + ": invalid value handle");
}

Value Tape::leaf(Tensor t) {
  return push({OpKind::kLeaf, -1, -1, 0, 0, std::move(t)});
}

Value Tape::constant(Tensor t) {
  return push({OpKind::kConstLeaf, -1, -1, 0, 0, std::move(t)});
}

const Tensor& Tape::value(Value v) const {
  check_valid(v, "value");
  return node(v).value;
}

OpKind Tape::kind(Value v) const {
  check_valid(v, "kind");
  return node(v).kind;
}

void Tape::reset() { nodes_.clear(); }

Value Tape::add(Value a, Value b) {
  check_valid(a, "add");
  check_valid(b, "add");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb)) shape_error("add", va, vb);
  Tensor out = va;
  const double* pb = vb.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] += pb[i];
  return push({OpKind::kAdd, a.id, b.id, 0, 0, std::move(out)});
}

Value Tape::sub(Value a, Value b) {
  check_valid(a, "sub");
  check_valid(b, "sub");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb)) shape_error("sub", va, vb);
  Tensor out = va;
  const double* pb = vb.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] -= pb[i];
  return push({OpKind::kSub, a.id, b.id, 0, 0, std::move(out)});
}

Value Tape::mul(Value a, Value b) {
  check_valid(a, "mul");
  check_valid(b, "mul");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb)) shape_error("mul", va, vb);
  Tensor out = va;
  const double* pb = vb.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] *= pb[i];
  return push({OpKind::kMul, a.id, b.id, 0, 0, std::move(out)});
}

Value Tape::matmul(Value a, Value b) {
  check_valid(a, "matmul");
  check_valid(b, "matmul");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (va.rank() != 2 || vb.rank() != 2 || va.shape()[1] != vb.shape()[0])
    shape_error("matmul", va, vb);
  const std::int64_t m = va.shape()[0];
  const std::int64_t k = va.shape()[1];
  const std::int64_t n = vb.shape()[1];
  Tensor out = Tensor::zeros({m, n});
  matmul_nn_acc(va.data(), vb.data(), out.data(), m, k, n);
  return push({OpKind::kMatMul, a.id, b.id, 0, 0, std::move(out)});
}

Value Tape::relu(Value x) {
  check_valid(x, "relu");
  Tensor out = node(x).value;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push({OpKind::kRelu, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::tanh(Value x) {
  check_valid(x, "tanh");
  Tensor out = node(x).value;
  for (double& v : out.values()) v = std::tanh(v);
  return push({OpKind::kTanh, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::sigmoid(Value x) {
  check_valid(x, "sigmoid");
  Tensor out = node(x).value;
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return push({OpKind::kSigmoid, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::exp(Value x) {
  check_valid(x, "exp");
  Tensor out = node(x).value;
  for (double& v : out.values()) v = std::exp(v);
  return push({OpKind::kExp, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::log(Value x) {
  check_valid(x, "log");
  Tensor out = node(x).value;
  for (double& v : out.values()) v = std::log(v);
  return push({OpKind::kLog, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::negate(Value x) {
  check_valid(x, "negate");
  Tensor out = node(x).value;
  for (double& v : out.values()) v = -v;
  return push({OpKind::kNegate, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::sum(Value x) {
  check_valid(x, "sum");
  const Tensor& vx = node(x).value;
  double acc = 0.0;
  for (double v : vx.values()) acc += v;
  return push({OpKind::kSum, x.id, -1, 0, 0, Tensor::scalar(acc)});
}

Value Tape::mean(Value x) {
  check_valid(x, "mean");
  const Tensor& vx = node(x).value;
  double acc = 0.0;
  for (double v : vx.values()) acc += v;
  return push({OpKind::kMean, x.id, -1, 0, 0,
               Tensor::scalar(acc / static_cast<double>(vx.numel()))});
}

Value Tape::concat_cols(Value a, Value b) {
  check_valid(a, "concat-last-axis");
  check_valid(b, "concat-last-axis");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (va.rank() != vb.rank()) shape_error("concat-last-axis", va, vb);
  if (va.rank() == 1) {
    std::vector<double> data(va.values());
    data.insert(data.end(), vb.values().begin(), vb.values().end());
    return push({OpKind::kConcatCols, a.id, b.id, 0, 0,
                 Tensor::vector(std::move(data))});
  }
  if (va.rank() != 2 || va.shape()[0] != vb.shape()[0])
    shape_error("concat-last-axis", va, vb);
  const std::int64_t n = va.shape()[0];
  const std::int64_t ca = va.shape()[1];
  const std::int64_t cb = vb.shape()[1];
  Tensor out = Tensor::zeros({n, ca + cb});
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(va.data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(vb.data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  return push({OpKind::kConcatCols, a.id, b.id, 0, 0, std::move(out)});
}

Value Tape::slice_cols(Value x, std::int64_t c0, std::int64_t c1) {
  check_valid(x, "slice");
  const Tensor& vx = node(x).value;
  const std::int64_t width = vx.rank() == 2 ? vx.shape()[1] : vx.shape()[0];
  if (c0 < 0 || c1 <= c0 || c1 > width)
    throw DimensionError("slice: range [" + std::to_string(c0) + ", " +
                         std::to_string(c1) + ") out of bounds for " +
                         vx.shape_str());
  if (vx.rank() == 1) {
    std::vector<double> data(vx.values().begin() + c0,
                             vx.values().begin() + c1);
    return push({OpKind::kSliceCols, x.id, -1, c0, c1,
                 Tensor::vector(std::move(data))});
  }
  const std::int64_t n = vx.shape()[0];
  const std::int64_t w = c1 - c0;
  Tensor out = Tensor::zeros({n, w});
  for (std::int64_t i = 0; i < n; ++i)
    std::copy_n(vx.data() + i * width + c0, w, out.data() + i * w);
  return push({OpKind::kSliceCols, x.id, -1, c0, c1, std::move(out)});
}

Value Tape::logsumexp(Value x, int axis) {
  check_valid(x, "log-sum-exp");
  const Tensor& vx = node(x).value;
  if (vx.rank() == 1) {
    double mx = vx.at(0);
    for (double v : vx.values()) mx = std::max(mx, v);
    double acc = 0.0;
    for (double v : vx.values()) acc += std::exp(v - mx);
    return push({OpKind::kLogSumExp, x.id, -1, 0, 0,
                 Tensor::scalar(mx + std::log(acc))});
  }
  if (vx.rank() != 2 || (axis != 0 && axis != 1))
    shape_error("log-sum-exp", vx);
  const std::int64_t n = vx.shape()[0];
  const std::int64_t m = vx.shape()[1];
  if (axis == 1) {
    Tensor out = Tensor::zeros({n, 1});
    for (std::int64_t i = 0; i < n; ++i) {
      const double* row = vx.data() + i * m;
      double mx = row[0];
      for (std::int64_t j = 1; j < m; ++j) mx = std::max(mx, row[j]);
      double acc = 0.0;
      for (std::int64_t j = 0; j < m; ++j) acc += std::exp(row[j] - mx);
      out.at(i) = mx + std::log(acc);
    }
    return push({OpKind::kLogSumExp, x.id, -1, 1, 0, std::move(out)});
  }
  Tensor out = Tensor::zeros({1, m});
  for (std::int64_t j = 0; j < m; ++j) {
    double mx = vx.at(0, j);
    for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, vx.at(i, j));
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += std::exp(vx.at(i, j) - mx);
    out.at(j) = mx + std::log(acc);
  }
  return push({OpKind::kLogSumExp, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::squared_diff(Value a, Value b) {
  check_valid(a, "squared-difference");
  check_valid(b, "squared-difference");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb)) shape_error("squared-difference", va, vb);
  Tensor out = va;
  const double* pb = vb.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    const double d = po[i] - pb[i];
    po[i] = d * d;
  }
  return push({OpKind::kSquaredDiff, a.id, b.id, 0, 0, std::move(out)});
}

Value Tape::transpose(Value x) {
  check_valid(x, "transpose");
  const Tensor& vx = node(x).value;
  if (vx.rank() != 2) shape_error("transpose", vx);
  const std::int64_t n = vx.shape()[0];
  const std::int64_t m = vx.shape()[1];
  Tensor out = Tensor::zeros({m, n});
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j) out.at(j, i) = vx.at(i, j);
  return push({OpKind::kTranspose, x.id, -1, 0, 0, std::move(out)});
}

Value Tape::scale(Value x, double k) {
  return mul(x, constant(Tensor::full(value(x).shape(), k)));
}

Value Tape::add_const(Value x, double k) {
  return add(x, constant(Tensor::full(value(x).shape(), k)));
}

Value Tape::row_sum(Value x) {
  const Tensor& vx = value(x);
  if (vx.rank() != 2) shape_error("row_sum", vx);
  return matmul(x, constant(Tensor::full({vx.shape()[1], 1}, 1.0)));
}

Value Tape::minimum(Value a, Value b) { return sub(a, relu(sub(a, b))); }

Value Tape::clamp(Value x, double lo, double hi) {
  // hi - relu((hi - lo) - relu(x - lo)); identity inside [lo, hi].
  Value shifted = relu(add_const(x, -lo));
  Value upper = relu(sub(constant(Tensor::full(value(x).shape(), hi - lo)),
                         shifted));
  return sub(constant(Tensor::full(value(x).shape(), hi)), upper);
}

Value Tape::diag_col(Value x) {
  const Tensor& vx = value(x);
  if (vx.rank() != 2 || vx.shape()[0] != vx.shape()[1])
    shape_error("diag_col", vx);
  const std::int64_t n = vx.shape()[0];
  Tensor eye = Tensor::zeros({n, n});
  for (std::int64_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
  return row_sum(mul(x, constant(std::move(eye))));
}

Gradients Tape::backward(Value root) const {
  check_valid(root, "backward");
  if (!node(root).value.is_scalar())
    throw ContractError("backward: root must be scalar-shaped, got " +
                        node(root).value.shape_str());

  std::vector<Tensor> grads(nodes_.size());
  grads[static_cast<std::size_t>(root.id)] = Tensor::scalar(1.0);

  auto accumulate = [&](int id, Tensor contribution) {
    if (id < 0) return;
    const Node& target = nodes_[static_cast<std::size_t>(id)];
    if (target.kind == OpKind::kConstLeaf) return;
    Tensor& slot = grads[static_cast<std::size_t>(id)];
    if (slot.numel() == 0) {
      slot = std::move(contribution);
      return;
    }
    double* pd = slot.data();
    const double* ps = contribution.data();
    for (std::int64_t i = 0; i < slot.numel(); ++i) pd[i] += ps[i];
  };
  auto wants = [&](int id) {
    return id >= 0 &&
           nodes_[static_cast<std::size_t>(id)].kind != OpKind::kConstLeaf;
  };

  for (int i = root.id; i >= 0; --i) {
    const Tensor& g = grads[static_cast<std::size_t>(i)];
    if (g.numel() == 0) continue;  // unreachable from root
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case OpKind::kLeaf:
      case OpKind::kConstLeaf:
        break;
      case OpKind::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case OpKind::kSub: {
        accumulate(n.a, g);
        if (wants(n.b)) {
          Tensor gb = g;
          for (double& v : gb.values()) v = -v;
          accumulate(n.b, std::move(gb));
        }
        break;
      }
      case OpKind::kMul: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        if (wants(n.a)) {
          Tensor ga = g;
          double* p = ga.data();
          const double* q = vb.data();
          for (std::int64_t j = 0; j < ga.numel(); ++j) p[j] *= q[j];
          accumulate(n.a, std::move(ga));
        }
        if (wants(n.b)) {
          Tensor gb = g;
          double* p = gb.data();
          const double* q = va.data();
          for (std::int64_t j = 0; j < gb.numel(); ++j) p[j] *= q[j];
          accumulate(n.b, std::move(gb));
        }
        break;
      }
      case OpKind::kMatMul: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        const std::int64_t m = va.shape()[0];
        const std::int64_t k = va.shape()[1];
        const std::int64_t cols = vb.shape()[1];
        if (wants(n.a)) {
          Tensor ga = Tensor::zeros({m, k});
          matmul_nt_acc(g.data(), vb.data(), ga.data(), m, cols, k);
          accumulate(n.a, std::move(ga));
        }
        if (wants(n.b)) {
          Tensor gb = Tensor::zeros({k, cols});
          matmul_tn_acc(va.data(), g.data(), gb.data(), m, k, cols);
          accumulate(n.b, std::move(gb));
        }
        break;
      }
      case OpKind::kRelu: {
        if (!wants(n.a)) break;
        const Tensor& vx = nodes_[static_cast<std::size_t>(n.a)].value;
        Tensor gx = g;
        double* p = gx.data();
        const double* x = vx.data();
        for (std::int64_t j = 0; j < gx.numel(); ++j)
          if (x[j] <= 0.0) p[j] = 0.0;
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kTanh: {
        if (!wants(n.a)) break;
        Tensor gx = g;
        double* p = gx.data();
        const double* y = n.value.data();
        for (std::int64_t j = 0; j < gx.numel(); ++j)
          p[j] *= 1.0 - y[j] * y[j];
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kSigmoid: {
        if (!wants(n.a)) break;
        Tensor gx = g;
        double* p = gx.data();
        const double* y = n.value.data();
        for (std::int64_t j = 0; j < gx.numel(); ++j)
          p[j] *= y[j] * (1.0 - y[j]);
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kExp: {
        if (!wants(n.a)) break;
        Tensor gx = g;
        double* p = gx.data();
        const double* y = n.value.data();
        for (std::int64_t j = 0; j < gx.numel(); ++j) p[j] *= y[j];
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kLog: {
        if (!wants(n.a)) break;
        const Tensor& vx = nodes_[static_cast<std::size_t>(n.a)].value;
        Tensor gx = g;
        double* p = gx.data();
        const double* x = vx.data();
        for (std::int64_t j = 0; j < gx.numel(); ++j) p[j] /= x[j];
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kNegate: {
        if (!wants(n.a)) break;
        Tensor gx = g;
        for (double& v : gx.values()) v = -v;
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kSum: {
        if (!wants(n.a)) break;
        const Tensor& vx = nodes_[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Tensor::full(vx.shape(), g.at(0)));
        break;
      }
      case OpKind::kMean: {
        if (!wants(n.a)) break;
        const Tensor& vx = nodes_[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Tensor::full(vx.shape(),
                                     g.at(0) / static_cast<double>(vx.numel())));
        break;
      }
      case OpKind::kConcatCols: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        if (va.rank() == 1) {
          const std::int64_t ca = va.numel();
          const std::int64_t cb = vb.numel();
          if (wants(n.a)) {
            Tensor ga = Tensor::zeros(va.shape());
            std::copy_n(g.data(), ca, ga.data());
            accumulate(n.a, std::move(ga));
          }
          if (wants(n.b)) {
            Tensor gb = Tensor::zeros(vb.shape());
            std::copy_n(g.data() + ca, cb, gb.data());
            accumulate(n.b, std::move(gb));
          }
          break;
        }
        const std::int64_t rows = va.shape()[0];
        const std::int64_t ca = va.shape()[1];
        const std::int64_t cb = vb.shape()[1];
        if (wants(n.a)) {
          Tensor ga = Tensor::zeros({rows, ca});
          for (std::int64_t r = 0; r < rows; ++r)
            std::copy_n(g.data() + r * (ca + cb), ca, ga.data() + r * ca);
          accumulate(n.a, std::move(ga));
        }
        if (wants(n.b)) {
          Tensor gb = Tensor::zeros({rows, cb});
          for (std::int64_t r = 0; r < rows; ++r)
            std::copy_n(g.data() + r * (ca + cb) + ca, cb, gb.data() + r * cb);
          accumulate(n.b, std::move(gb));
        }
        break;
      }
      case OpKind::kSliceCols: {
        if (!wants(n.a)) break;
        const Tensor& vx = nodes_[static_cast<std::size_t>(n.a)].value;
        Tensor gx = Tensor::zeros(vx.shape());
        if (vx.rank() == 1) {
          std::copy_n(g.data(), n.p1 - n.p0, gx.data() + n.p0);
        } else {
          const std::int64_t width = vx.shape()[1];
          const std::int64_t w = n.p1 - n.p0;
          for (std::int64_t r = 0; r < vx.shape()[0]; ++r)
            std::copy_n(g.data() + r * w, w, gx.data() + r * width + n.p0);
        }
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kLogSumExp: {
        if (!wants(n.a)) break;
        const Tensor& vx = nodes_[static_cast<std::size_t>(n.a)].value;
        Tensor gx = Tensor::zeros(vx.shape());
        if (vx.rank() == 1) {
          const double lse = n.value.at(0);
          const double gv = g.at(0);
          for (std::int64_t j = 0; j < vx.numel(); ++j)
            gx.at(j) = gv * std::exp(vx.at(j) - lse);
        } else if (n.p0 == 1) {
          const std::int64_t m = vx.shape()[1];
          for (std::int64_t r = 0; r < vx.shape()[0]; ++r) {
            const double lse = n.value.at(r);
            const double gv = g.at(r);
            for (std::int64_t j = 0; j < m; ++j)
              gx.at(r, j) = gv * std::exp(vx.at(r, j) - lse);
          }
        } else {
          const std::int64_t m = vx.shape()[1];
          for (std::int64_t j = 0; j < m; ++j) {
            const double lse = n.value.at(j);
            const double gv = g.at(j);
            for (std::int64_t r = 0; r < vx.shape()[0]; ++r)
              gx.at(r, j) = gv * std::exp(vx.at(r, j) - lse);
          }
        }
        accumulate(n.a, std::move(gx));
        break;
      }
      case OpKind::kSquaredDiff: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        if (wants(n.a)) {
          Tensor ga = g;
          double* p = ga.data();
          for (std::int64_t j = 0; j < ga.numel(); ++j)
            p[j] *= 2.0 * (va.at(j) - vb.at(j));
          accumulate(n.a, std::move(ga));
        }
        if (wants(n.b)) {
          Tensor gb = g;
          double* p = gb.data();
          for (std::int64_t j = 0; j < gb.numel(); ++j)
            p[j] *= -2.0 * (va.at(j) - vb.at(j));
          accumulate(n.b, std::move(gb));
        }
        break;
      }
      case OpKind::kTranspose: {
        if (!wants(n.a)) break;
        const std::int64_t rows = n.value.shape()[0];
        const std::int64_t cols = n.value.shape()[1];
        Tensor gx = Tensor::zeros({cols, rows});
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < cols; ++c) gx.at(c, r) = g.at(r, c);
        accumulate(n.a, std::move(gx));
        break;
      }
    }
  }
  return Gradients(this, std::move(grads));
}

}  // namespace lcsac
