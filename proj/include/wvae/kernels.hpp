#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wvae::kernels {

// Dense matrix products, the hot loops of training. Each kernel exists in a
// serial reference form and an OpenMP form. The parallel form splits work by
// output row, so every output element is accumulated by exactly one thread
// in the same k-order as the serial form: results are bitwise identical.
//
// All kernels ACCUMULATE into c; callers zero the buffer first.

/// c[m x n] += a[m x k] * b[k x n]
void matmul_serial(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);

/// c[m x n] += a[m x k] * b^T, where b is [n x k]
void matmul_nt_serial(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);

/// c[m x n] += a^T * b, where a is [k x m], b is [k x n]
void matmul_tn_serial(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);

// Work threshold (in multiply-adds / elements) below which the parallel
// entry points fall through to the serial loops.
inline constexpr std::size_t kMatmulGrain = 1u << 15;
inline constexpr std::size_t kMapGrain = 1u << 14;

/// Applies fn(i) for i in [0, n), in parallel when n is large. fn must write
/// only to index-i slots; iterations are independent, so the result does not
/// depend on the schedule.
template <typename F>
void parallel_map(std::size_t n, F&& fn) {
#ifdef _OPENMP
  if (n >= kMapGrain) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) {
    fn(i);
  }
}

}  // namespace wvae::kernels
