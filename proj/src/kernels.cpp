#include "dddm/kernels.hpp"

#include <omp.h>

#include <atomic>

#include "dddm/errors.hpp"

namespace dddm::kernels {

namespace {

std::atomic<Exec> g_exec{Exec::parallel};

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;

bool go_parallel(Exec e, std::size_t work) { return e == Exec::parallel && work >= kParallelWork; }

}  // namespace

void set_default_exec(Exec e) { g_exec = e; }
Exec default_exec() { return g_exec; }
int max_threads() { return omp_get_max_threads(); }

Tensor matmul(const Tensor& a, const Tensor& b, Exec e) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor c(n, m);
  auto row = [&](std::size_t i) {
    double* ci = c.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row_ptr(p);
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  };
  if (go_parallel(e, n * k * m)) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) row(i);
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b, Exec e) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: " + a.shape_str() + " ^T x " + b.shape_str());
  const std::size_t r = a.rows(), n = a.cols(), m = b.cols();
  Tensor c(n, m);
  auto row = [&](std::size_t i) {
    double* ci = c.row_ptr(i);
    for (std::size_t p = 0; p < r; ++p) {
      const double api = a(p, i);
      const double* bp = b.row_ptr(p);
      for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  };
  if (go_parallel(e, r * n * m)) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) row(i);
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b, Exec e) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: " + a.shape_str() + " x " + b.shape_str() + "^T");
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Tensor c(n, m);
  auto row = [&](std::size_t i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  };
  if (go_parallel(e, n * k * m)) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) row(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) row(i);
  }
  return c;
}

}  // namespace dddm::kernels
