#pragma once

#include <cstddef>
#include <string>

// Double-precision vector kernels behind the trainer, the RFF baseline and
// the scaler. Every kernel has a scalar reference implementation and, on
// x86-64, an AVX2/FMA variant; the active set is chosen once at runtime from
// CPUID (override with CRUMBLE_KERNELS=scalar|avx2). Variants are
// equivalence-tested against the scalar reference.

namespace crumble::kern {

struct Kernels {
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scal)(double a, double* x, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // sum_i (x[i]-shift)^2
  double (*sumsq)(const double* x, double shift, std::size_t n);
  // y = W x + b, W row-major (rows x cols); b may be null
  void (*matvec)(const double* w, const double* b, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
  // out[j] = sum_i W[i][j]*g[i]  (W^T g), W row-major (rows x cols)
  void (*matvec_t)(const double* w, const double* g, double* out, std::size_t rows,
                   std::size_t cols);
  // W[i][j] += g[i]*x[j]  (rank-1 accumulate)
  void (*ger)(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols);
  const char* name;
};

// Active kernel set (dispatch resolved on first use).
const Kernels& active();

// Named sets, for equivalence tests.
const Kernels& scalar_kernels();
bool have_avx2();
const Kernels* avx2_kernels();  // nullptr when unsupported

}  // namespace crumble::kern
