// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/autodiff.hpp"

#include <cmath>
#include <string>

#include "dastnet/error.hpp"
#include "dastnet/kernels.hpp"

namespace dastnet::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Node n;
  n.op = Op::Param;
  n.value = p.value;
  n.param = &p;
  Var v = push(std::move(n));
  bound_.emplace(&p, v.id());
  return v;
}

Tensor& Tape::grad_buffer(std::uint32_t id) {
  if (grads_[id].empty()) grads_[id] = Tensor(nodes_[id].value.shape());
  return grads_[id];
}

Tensor Tape::grad(const Var& v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
  return Tensor(v.value().shape());
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw std::invalid_argument("loss belongs to a different tape");
  if (loss.value().size() != 1)
    throw DimensionError("backward needs a scalar loss, got shape " +
                         shape_string(loss.value().shape()));
  grads_.assign(nodes_.size(), Tensor());
  grad_buffer(loss.id()).fill(1.0);
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    if (!grads_[id].empty()) propagate(id);
  }
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (n.op != Op::Param) continue;
    Parameter& p = *n.param;
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    if (!grads_[id].empty()) p.grad.add_inplace(grads_[id]);
  }
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

Tape::Node make(Op op, const Var& a, Tensor value) {
  Tape::Node n;
  n.op = op;
  n.in[0] = a.id();
  n.n_in = 1;
  n.value = std::move(value);
  return n;
}

Tape::Node make(Op op, const Var& a, const Var& b, Tensor value) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands live on different tapes");
  Tape::Node n = make(op, a, std::move(value));
  n.in[1] = b.id();
  n.n_in = 2;
  return n;
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward rules
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul", av);
  require_rank2("matmul", bv);
  if (av.cols() != bv.rows())
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  Tensor out({av.rows(), bv.cols()});
  kernels::matmul(av.data(), bv.data(), out.data(), av.rows(), av.cols(), bv.cols());
  return a.tape().push(make(Op::MatMul, a, b, std::move(out)));
}

Var matmul_nt(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul_nt", av);
  require_rank2("matmul_nt", bv);
  if (av.cols() != bv.cols())
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()) + "^T");
  Tensor out({av.rows(), bv.rows()});
  kernels::matmul_nt(av.data(), bv.data(), out.data(), av.rows(), av.cols(), bv.rows());
  return a.tape().push(make(Op::MatMulNT, a, b, std::move(out)));
}

Var add_row(const Var& x, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_rank2("add_row", xv);
  if (bv.size() != xv.cols() || bv.rows() != 1)
    throw DimensionError("add_row: bias " + shape_string(bv.shape()) + " does not fit rows of " +
                         shape_string(xv.shape()));
  Tensor out = xv;
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
  return x.tape().push(make(Op::AddRow, x, bias, std::move(out)));
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  out.add_inplace(b.value());
  return a.tape().push(make(Op::Add, a, b, std::move(out)));
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().push(make(Op::Sub, a, b, std::move(out)));
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().push(make(Op::Mul, a, b, std::move(out)));
}

Var sigmoid(const Var& x) {
  return x.tape().push(make(Op::Sigmoid, x, map(x.value(), sigmoid_scalar)));
}

Var tanh(const Var& x) {
  return x.tape().push(make(Op::Tanh, x, map(x.value(), [](double v) { return std::tanh(v); })));
}

Var relu(const Var& x) {
  return x.tape().push(make(Op::Relu, x, map(x.value(), [](double v) { return v > 0 ? v : 0.0; })));
}

Var log(const Var& x) {
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i)
    if (!(xv[i] > 0.0))
      throw DomainError("log: non-positive value " + std::to_string(xv[i]) + " at index " +
                        std::to_string(i));
  return x.tape().push(make(Op::Log, x, map(xv, [](double v) { return std::log(v); })));
}

Var scale(const Var& x, double factor) {
  auto n = make(Op::Scale, x, map(x.value(), [factor](double v) { return factor * v; }));
  n.scalar = factor;
  return x.tape().push(std::move(n));
}

Var add_scalar(const Var& x, double c) {
  auto n = make(Op::AddScalar, x, map(x.value(), [c](double v) { return v + c; }));
  n.scalar = c;
  return x.tape().push(std::move(n));
}

Var abs(const Var& x) {
  return x.tape().push(make(Op::Abs, x, map(x.value(), [](double v) { return std::fabs(v); })));
}

Var clamp_min(const Var& x, double floor) {
  auto n = make(Op::ClampMin, x, map(x.value(), [floor](double v) { return v < floor ? floor : v; }));
  n.scalar = floor;
  return x.tape().push(std::move(n));
}

Var square(const Var& x) {
  return x.tape().push(make(Op::Square, x, map(x.value(), [](double v) { return v * v; })));
}

Var scalar_mul(const Var& s, const Var& x) {
  if (s.value().size() != 1)
    throw DimensionError("scalar_mul: multiplier must have one element, got " +
                         shape_string(s.value().shape()));
  const double sv = s.value()[0];
  return x.tape().push(make(Op::ScalarMul, s, x, map(x.value(), [sv](double v) { return sv * v; })));
}

Var elementwise(Elementwise kind, const Var& a, const Var* b, double factor) {
  auto need_b = [&]() -> const Var& {
    if (!b) throw std::invalid_argument("binary elementwise op needs a second operand");
    return *b;
  };
  switch (kind) {
    case Elementwise::Add: return add(a, need_b());
    case Elementwise::Sub: return sub(a, need_b());
    case Elementwise::Mul: return mul(a, need_b());
    case Elementwise::Sigmoid: return sigmoid(a);
    case Elementwise::Tanh: return tanh(a);
    case Elementwise::Relu: return relu(a);
    case Elementwise::Log: return log(a);
    case Elementwise::Scale: return scale(a, factor);
  }
  throw std::invalid_argument("unknown elementwise kind");
}

Var concat(const Var& a, const Var& b, std::size_t axis) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != bv.rank())
    throw DimensionError("concat: rank mismatch " + shape_string(av.shape()) + " vs " +
                         shape_string(bv.shape()));
  if (axis >= av.rank())
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(av.rank()));
  if (av.rank() > 2) throw DimensionError("concat: only rank 1 and 2 are supported");
  Tensor out;
  if (av.rank() == 1) {
    std::vector<double> v(av.values());
    v.insert(v.end(), bv.values().begin(), bv.values().end());
    const std::size_t n = v.size();
    out = Tensor({n}, std::move(v));
  } else if (axis == 0) {
    if (av.cols() != bv.cols())
      throw DimensionError("concat: column counts differ, " + shape_string(av.shape()) + " vs " +
                           shape_string(bv.shape()));
    std::vector<double> v(av.values());
    v.insert(v.end(), bv.values().begin(), bv.values().end());
    out = Tensor({av.rows() + bv.rows(), av.cols()}, std::move(v));
  } else {
    if (av.rows() != bv.rows())
      throw DimensionError("concat: row counts differ, " + shape_string(av.shape()) + " vs " +
                           shape_string(bv.shape()));
    const std::size_t ca = av.cols(), cb = bv.cols(), rows = av.rows();
    out = Tensor({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(av.data().begin() + r * ca, ca, out.data().begin() + r * (ca + cb));
      std::copy_n(bv.data().begin() + r * cb, cb, out.data().begin() + r * (ca + cb) + ca);
    }
  }
  auto n = make(Op::Concat, a, b, std::move(out));
  n.axis = axis;
  return a.tape().push(std::move(n));
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  require_rank2("gather_rows", xv);
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  const std::size_t c = xv.cols();
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows())
      throw DomainError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                        shape_string(xv.shape()));
    std::copy_n(xv.data().begin() + rows[i] * c, c, out.data().begin() + i * c);
  }
  auto n = make(Op::GatherRows, x, std::move(out));
  n.index.assign(rows.begin(), rows.end());
  return x.tape().push(std::move(n));
}

Var softmax_rows(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() > 2) throw DimensionError("softmax_rows: rank must be 1 or 2");
  Tensor out(xv.shape());
  const std::size_t c = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const double* in = xv.data().data() + r * c;
    double* o = out.data().data() + r * c;
    double mx = in[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < c; ++j) o[j] /= z;
  }
  return x.tape().push(make(Op::SoftmaxRows, x, std::move(out)));
}

Var grad_reverse(const Var& x, double factor) {
  if (factor < 0) throw std::invalid_argument("grad_reverse: factor must be non-negative");
  auto n = make(Op::GradReverse, x, x.value());
  n.scalar = factor;
  return x.tape().push(std::move(n));
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.tape().push(make(Op::Sum, x, Tensor::scalar(s)));
}

Var mean(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.tape().push(make(Op::Mean, x, Tensor::scalar(s / static_cast<double>(x.value().size()))));
}

// ---------------------------------------------------------------------------
// Backward rules
// ---------------------------------------------------------------------------

void Tape::propagate(std::uint32_t id) {
  const Node& n = nodes_[id];
  if (n.op == Op::Constant || n.op == Op::Param) return;
  const Tensor& g = grads_[id];
  const Tensor& y = n.value;
  const std::uint32_t a = n.in[0];
  const std::uint32_t b = n.in[1];

  auto unary = [&](auto dydx) {
    Tensor& ga = grad_buffer(a);
    const Tensor& x = nodes_[a].value;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dydx(x[i], y[i]);
  };

  switch (n.op) {
    case Op::MatMul: {
      const Tensor& av = nodes_[a].value;
      const Tensor& bv = nodes_[b].value;
      const std::size_t m = av.rows(), k = av.cols(), cols = bv.cols();
      // dA += dC B^T ; dB += A^T dC
      kernels::matmul_nt(g.data(), bv.data(), grad_buffer(a).data(), m, cols, k);
      kernels::matmul_tn(av.data(), g.data(), grad_buffer(b).data(), m, k, cols);
      break;
    }
    case Op::MatMulNT: {
      const Tensor& av = nodes_[a].value;
      const Tensor& bv = nodes_[b].value;
      const std::size_t m = av.rows(), k = av.cols(), rows_b = bv.rows();
      // C = A B^T: dA += dC B ; dB += dC^T A
      kernels::matmul(g.data(), bv.data(), grad_buffer(a).data(), m, rows_b, k);
      kernels::matmul_tn(g.data(), av.data(), grad_buffer(b).data(), m, rows_b, k);
      break;
    }
    case Op::AddRow: {
      grad_buffer(a).add_inplace(g);
      Tensor& gb = grad_buffer(b);
      const std::size_t c = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
      break;
    }
    case Op::Add:
      grad_buffer(a).add_inplace(g);
      grad_buffer(b).add_inplace(g);
      break;
    case Op::Sub: {
      grad_buffer(a).add_inplace(g);
      Tensor& gb = grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      break;
    }
    case Op::Mul: {
      const Tensor& av = nodes_[a].value;
      const Tensor& bv = nodes_[b].value;
      Tensor& ga = grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      Tensor& gb = grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      break;
    }
    case Op::Sigmoid: unary([](double, double s) { return s * (1.0 - s); }); break;
    case Op::Tanh: unary([](double, double t) { return 1.0 - t * t; }); break;
    case Op::Relu: unary([](double x, double) { return x > 0 ? 1.0 : 0.0; }); break;
    case Op::Log: unary([](double x, double) { return 1.0 / x; }); break;
    case Op::Scale: {
      const double f = n.scalar;
      unary([f](double, double) { return f; });
      break;
    }
    case Op::AddScalar: grad_buffer(a).add_inplace(g); break;
    case Op::Abs: unary([](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }); break;
    case Op::ClampMin: {
      const double floor = n.scalar;
      unary([floor](double x, double) { return x > floor ? 1.0 : 0.0; });
      break;
    }
    case Op::Square: unary([](double x, double) { return 2.0 * x; }); break;
    case Op::ScalarMul: {
      const double s = nodes_[a].value[0];
      const Tensor& xv = nodes_[b].value;
      double ds = 0.0;
      Tensor& gx = grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ds += g[i] * xv[i];
        gx[i] += s * g[i];
      }
      grad_buffer(a)[0] += ds;
      break;
    }
    case Op::Concat: {
      Tensor& ga = grad_buffer(a);
      Tensor& gb = grad_buffer(b);
      if (y.rank() == 1 || n.axis == 0) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
      } else {
        const std::size_t ca = ga.cols(), cb = gb.cols();
        for (std::size_t r = 0; r < y.rows(); ++r) {
          for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += g[r * (ca + cb) + j];
          for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += g[r * (ca + cb) + ca + j];
        }
      }
      break;
    }
    case Op::SoftmaxRows: {
      Tensor& ga = grad_buffer(a);
      const std::size_t c = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * y[r * c + j];
        for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += y[r * c + j] * (g[r * c + j] - dot);
      }
      break;
    }
    case Op::GradReverse: {
      const double f = -n.scalar;
      Tensor& ga = grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i];
      break;
    }
    case Op::Sum: {
      Tensor& ga = grad_buffer(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
      break;
    }
    case Op::Mean: {
      Tensor& ga = grad_buffer(a);
      const double s = g[0] / static_cast<double>(ga.size());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s;
      break;
    }
    case Op::GatherRows: {
      Tensor& ga = grad_buffer(a);
      const std::size_t c = ga.cols();
      for (std::size_t i = 0; i < n.index.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) ga[n.index[i] * c + j] += g[i * c + j];
      break;
    }
    case Op::Constant:
    case Op::Param: break;
  }
}

}  // namespace dastnet::ad
