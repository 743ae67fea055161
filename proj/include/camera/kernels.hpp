#pragma once

#include <cstddef>
#include <string>

namespace camera::kern {

// Inner-loop kernels behind tensor ops. Scalar reference implementations and
// AVX2 variants share the exact same per-element operation order (no FMA
// contraction), so the two lanes produce bit-identical results; the runtime
// pick is a pure speed choice.
struct Kernels {
  // c[m×n] += a[m×k] * b[k×n], all row-major
  void (*gemm_nn)(const double* a, const double* b, double* c, int m, int k,
                  int n);
  // c[k×n] += a[m×k]^T * b[m×n]
  void (*gemm_tn)(const double* a, const double* b, double* c, int m, int k,
                  int n);
  void (*add)(const double* a, const double* b, double* y, size_t n);
  void (*sub)(const double* a, const double* b, double* y, size_t n);
  void (*mul)(const double* a, const double* b, double* y, size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, size_t n);
};

const Kernels& scalar();
#ifdef CAMERA_HAVE_AVX2
const Kernels& avx2();
#endif

// Active kernel set. Selection: explicit select(), else CAMERA_KERNELS env
// var ("scalar"/"avx2"), else CPU detection.
const Kernels& active();
void select(const std::string& name);  // "scalar", "avx2", "auto"
std::string activeName();
bool avx2Available();

}  // namespace camera::kern
