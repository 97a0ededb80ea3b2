#include "crumble/kern/kernels.hpp"

namespace crumble::kern {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq_scalar(const double* x, double shift, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - shift;
    acc += d * d;
  }
  return acc;
}

void matvec_scalar(const double* w, const double* b, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = (b ? b[r] : 0.0) + dot_scalar(w + r * cols, x, cols);
  }
}

void matvec_t_scalar(const double* w, const double* g, double* out, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(g[r], w + r * cols, out, cols);
}

void ger_scalar(double* w, const double* g, const double* x, std::size_t rows,
                std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(g[r], x, w + r * cols, cols);
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{dot_scalar,      axpy_scalar, scal_scalar, sum_scalar,
                         sumsq_scalar,    matvec_scalar, matvec_t_scalar, ger_scalar,
                         "scalar"};
  return k;
}

}  // namespace crumble::kern
