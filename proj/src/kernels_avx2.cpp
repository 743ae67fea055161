#include <immintrin.h>

#include "camera/kernels.hpp"

// AVX2 lanes vectorize over the contiguous output dimension only, keeping the
// per-element add/mul order identical to the scalar reference (and no FMA),
// so results are bit-identical.

namespace camera::kern {
namespace {

inline void row_axpy(double av, const double* b, double* c, int n) {
  const __m256d a4 = _mm256_set1_pd(av);
  int j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d cv = _mm256_loadu_pd(c + j);
    __m256d bv = _mm256_loadu_pd(b + j);
    cv = _mm256_add_pd(cv, _mm256_mul_pd(a4, bv));
    _mm256_storeu_pd(c + j, cv);
  }
  for (; j < n; ++j) c[j] += av * b[j];
}

void gemm_nn_avx2(const double* a, const double* b, double* c, int m, int k,
                  int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      row_axpy(av, b + static_cast<size_t>(p) * n, crow, n);
    }
  }
}

void gemm_tn_avx2(const double* a, const double* b, double* c, int m, int k,
                  int n) {
  for (int p = 0; p < m; ++p) {
    const double* arow = a + static_cast<size_t>(p) * k;
    const double* brow = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < k; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      row_axpy(av, brow, c + static_cast<size_t>(i) * n, n);
    }
  }
}

void add_avx2(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
  const __m256d a4 = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_add_pd(yv, _mm256_mul_pd(a4, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Kernels& avx2() {
  static const Kernels k{gemm_nn_avx2, gemm_tn_avx2, add_avx2,
                         sub_avx2,     mul_avx2,     axpy_avx2};
  return k;
}

}  // namespace camera::kern
