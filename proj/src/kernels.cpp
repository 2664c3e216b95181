#include "wvae/kernels.hpp"

namespace wvae::kernels {

namespace {

// Row bodies shared by the serial and parallel entry points. The inner
// accumulation order over k is fixed, which is what makes the two paths
// bitwise equal.

inline void matmul_row(const double* a, const double* b, double* c, std::size_t i,
                       std::size_t k, std::size_t n) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (std::size_t p = 0; p < k; ++p) {
    const double aip = arow[p];
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) {
      crow[j] += aip * brow[j];
    }
  }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, std::size_t i,
                          std::size_t k, std::size_t n) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      acc += arow[p] * brow[p];
    }
    crow[j] += acc;
  }
}

inline void matmul_tn_row(const double* a, const double* b, double* c, std::size_t i,
                          std::size_t m, std::size_t k, std::size_t n) {
  double* crow = c + i * n;
  for (std::size_t p = 0; p < k; ++p) {
    const double api = a[p * m + i];
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) {
      crow[j] += api * brow[j];
    }
  }
}

}  // namespace

void matmul_serial(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    matmul_row(a, b, c, i, k, n);
  }
}

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
#ifdef _OPENMP
  if (m * k * n >= kMatmulGrain && m > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
      matmul_row(a, b, c, static_cast<std::size_t>(i), k, n);
    }
    return;
  }
#endif
  matmul_serial(a, b, c, m, k, n);
}

void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    matmul_nt_row(a, b, c, i, k, n);
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#ifdef _OPENMP
  if (m * k * n >= kMatmulGrain && m > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
      matmul_nt_row(a, b, c, static_cast<std::size_t>(i), k, n);
    }
    return;
  }
#endif
  matmul_nt_serial(a, b, c, m, k, n);
}

void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    matmul_tn_row(a, b, c, i, m, k, n);
  }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#ifdef _OPENMP
  if (m * k * n >= kMatmulGrain && m > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
      matmul_tn_row(a, b, c, static_cast<std::size_t>(i), m, k, n);
    }
    return;
  }
#endif
  matmul_tn_serial(a, b, c, m, k, n);
}

}  // namespace wvae::kernels
