#include "dddm/ops.hpp"

#include <cmath>

#include "dddm/errors.hpp"
#include "dddm/kernels.hpp"

namespace dddm::ad {

namespace {

enum class Bcast { same, row, col, scalar };

Bcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return Bcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Bcast::col;
  throw ShapeError(std::string(op) + ": cannot broadcast " + b.shape_str() + " onto " + a.shape_str());
}

std::size_t bindex(Bcast k, std::size_t r, std::size_t c, std::size_t cols) {
  switch (k) {
    case Bcast::same: return r * cols + c;
    case Bcast::row: return c;
    case Bcast::col: return r;
    case Bcast::scalar: return 0;
  }
  return 0;
}

Tape& same_tape(Var a, Var b) {
  if (!a.tape() || a.tape() != b.tape()) throw ContractError("operands live on different tapes");
  return *a.tape();
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// Elementwise unary op whose derivative is a function of (input, output).
template <class F, class D>
Var unary(Var a, F f, D df) {
  Tape& tp = *a.tape();
  const int ia = a.id();
  return tp.push(map(a.value(), f), {ia}, [ia, df](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_ref(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* name, F f, DA dfa, DB dfb) {
  Tape& tp = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Bcast k = broadcast_kind(av, bv, name);
  Tensor out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c)
      out(r, c) = f(av(r, c), bv[bindex(k, r, c, av.cols())]);
  const int ia = a.id(), ib = b.id();
  return tp.push(std::move(out), {ia, ib}, [ia, ib, k, dfa, dfb](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    const std::size_t cols = x.cols();
    if (t.needs_grad(ia)) {
      Tensor& ga = t.grad_ref(ia);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
          ga(r, c) += g(r, c) * dfa(x(r, c), y[bindex(k, r, c, cols)]);
    }
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad_ref(ib);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t j = bindex(k, r, c, cols);
          gb[j] += g(r, c) * dfb(x(r, c), y[j]);
        }
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tp = same_tape(a, b);
  const int ia = a.id(), ib = b.id();
  return tp.push(kernels::matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    if (t.needs_grad(ia)) {
      Tensor d = kernels::matmul_nt(g, t.value(ib));
      Tensor& ga = t.grad_ref(ia);
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
    }
    if (t.needs_grad(ib)) {
      Tensor d = kernels::matmul_tn(t.value(ia), g);
      Tensor& gb = t.grad_ref(ib);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i];
    }
  });
}

Var add(Var a, Var b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
                [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
                [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
                [](double x, double) { return x; });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var silu(Var a) {
  return unary(
      a, [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& tp = *parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    if (p.tape() != &tp) throw ContractError("operands live on different tapes");
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch " + p.value().shape_str());
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    off += v.cols();
  }
  return tp.push(std::move(out), ids, [ids, widths](Tape& t, int self) {
    const Tensor& g = t.grad_ref(self);
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) {
        Tensor& gk = t.grad_ref(ids[k]);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) gk(r, c) += g(r, o + c);
      }
      o += widths[k];
    }
  });
}

Var mean_pool(Var a, std::size_t group) {
  const Tensor& v = a.value();
  if (group == 0 || v.rows() % group != 0)
    throw ShapeError("mean_pool: " + std::to_string(v.rows()) + " rows not divisible by group " +
                     std::to_string(group));
  const std::size_t n = v.rows() / group;
  Tensor out(n, v.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < group; ++k)
      for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) += v(i * group + k, c);
  const double inv = 1.0 / static_cast<double>(group);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  const int ia = a.id();
  return a.tape()->push(std::move(out), {ia}, [ia, group, inv](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += inv * g(r / group, c);
  });
}

Var gather_rows(Var table, const std::vector<std::size_t>& index) {
  const Tensor& v = table.value();
  Tensor out(index.size(), v.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= v.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t c = 0; c < v.cols(); ++c) out(i, c) = v(index[i], c);
  }
  const int ia = table.id();
  return table.tape()->push(std::move(out), {ia}, [ia, index](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_ref(self);
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(index[i], c) += g(i, c);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  const int ia = a.id();
  return a.tape()->push(Tensor::scalar(s), {ia}, [ia](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const double g = t.grad_ref(self)[0];
    Tensor& ga = t.grad_ref(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ContractError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var l1_loss(Var a, Var b) {
  if (!a.value().same_shape(b.value())) throw ShapeError("l1_loss: " + a.value().shape_str() + " vs " + b.value().shape_str());
  Var d = sub(a, b);
  Var m = unary(d, [](double x) { return std::fabs(x); },
                [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  return mean(m);
}

Var mse_loss(Var a, Var b) {
  if (!a.value().same_shape(b.value())) throw ShapeError("mse_loss: " + a.value().shape_str() + " vs " + b.value().shape_str());
  Var d = sub(a, b);
  return mean(mul(d, d));
}

}  // namespace dddm::ad
