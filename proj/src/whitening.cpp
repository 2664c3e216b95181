#include "wvae/whitening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wvae/kernels.hpp"

namespace wvae {

namespace {

double max_abs(const Mat& m) {
  double v = 0.0;
  for (double x : m.v) v = std::max(v, std::abs(x));
  return v;
}

double max_off_diagonal(const Mat& a) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = i + 1; j < a.cols; ++j) {
      v = std::max(v, std::abs(a.at(i, j)));
    }
  }
  return v;
}

}  // namespace

std::pair<std::vector<double>, Mat> jacobi_eigh(const Mat& s, int max_sweeps) {
  if (s.rows != s.cols || s.rows == 0) {
    throw std::invalid_argument("jacobi_eigh: matrix must be square and nonempty");
  }
  const std::size_t d = s.rows;
  const double sym_tol = 1e-9 * std::max(1.0, max_abs(s));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (std::abs(s.at(i, j) - s.at(j, i)) > sym_tol) {
        throw std::invalid_argument("jacobi_eigh: matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }

  // Work on the symmetrized copy; rotations then preserve symmetry exactly.
  Mat a(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      a.at(i, j) = 0.5 * (s.at(i, j) + s.at(j, i));
    }
  }
  Mat v(d, d);
  for (std::size_t i = 0; i < d; ++i) v.at(i, i) = 1.0;

  constexpr double kOffTol = 1e-12;

  int sweep = 0;
  for (; sweep < max_sweeps && max_off_diagonal(a) >= kOffTol; ++sweep) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (std::size_t i = 0; i < d; ++i) {
          const double aip = a.at(i, p);
          const double aiq = a.at(i, q);
          a.at(i, p) = c * aip - sn * aiq;
          a.at(i, q) = sn * aip + c * aiq;
        }
        for (std::size_t j = 0; j < d; ++j) {
          const double apj = a.at(p, j);
          const double aqj = a.at(q, j);
          a.at(p, j) = c * apj - sn * aqj;
          a.at(q, j) = sn * apj + c * aqj;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vip = v.at(i, p);
          const double viq = v.at(i, q);
          v.at(i, p) = c * vip - sn * viq;
          v.at(i, q) = sn * vip + c * viq;
        }
      }
    }
  }

  const double residual = max_off_diagonal(a);
  if (residual >= kOffTol) {
    throw std::runtime_error("jacobi_eigh: no convergence after " +
                             std::to_string(max_sweeps) +
                             " sweeps, off-diagonal residual " +
                             std::to_string(residual));
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a.at(i, i) > a.at(j, j); });

  std::vector<double> eigvals(d);
  Mat eigvecs(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t src = order[j];
    eigvals[j] = a.at(src, src);
    // sign convention: largest-magnitude component positive
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (std::abs(v.at(i, src)) > best) {
        best = std::abs(v.at(i, src));
        arg = i;
      }
    }
    const double flip = v.at(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      eigvecs.at(i, j) = flip * v.at(i, src);
    }
  }
  return {std::move(eigvals), std::move(eigvecs)};
}

WhiteningTransform fit_whitening(const Mat& z) {
  if (z.rows < 2) {
    throw std::invalid_argument("fit_whitening: need at least 2 samples, got " +
                                std::to_string(z.rows));
  }
  const std::size_t n = z.rows;
  const std::size_t d = z.cols;

  WhiteningTransform t;
  t.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) t.mean[j] += z.at(i, j);
  }
  for (double& m : t.mean) m /= static_cast<double>(n);

  Mat centered(n, d);
  kernels::parallel_map(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < d; ++j) {
      centered.at(i, j) = z.at(i, j) - t.mean[j];
    }
  });

  Mat cov(d, d);
  kernels::matmul_tn(centered.v.data(), centered.v.data(), cov.v.data(), d, n, d);
  for (double& c : cov.v) c /= static_cast<double>(n - 1);

  auto [eigvals, eigvecs] = jacobi_eigh(cov);
  t.eigvals = std::move(eigvals);
  t.eigvecs = std::move(eigvecs);
  t.degenerate.assign(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    t.degenerate[j] = t.eigvals[j] < kDegenerateEigenvalue;
    if (t.eigvals[j] < 0.0) t.eigvals[j] = 0.0;
  }
  return t;
}

namespace {

void check_dim(std::size_t got, const WhiteningTransform& t, const char* who) {
  if (got != t.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension " + std::to_string(got) +
                                " does not match transform dimension " +
                                std::to_string(t.dim()));
  }
}

}  // namespace

Mat whiten(const Mat& z, const WhiteningTransform& t) {
  check_dim(z.cols, t, "whiten");
  const std::size_t d = t.dim();
  Mat out(z.rows, d);
  kernels::parallel_map(z.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (t.degenerate[j]) {
        out.at(i, j) = 0.0;
        continue;
      }
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        acc += t.eigvecs.at(k, j) * (z.at(i, k) - t.mean[k]);
      }
      out.at(i, j) = acc / std::sqrt(t.eigvals[j]);
    }
  });
  return out;
}

std::vector<double> whiten(std::span<const double> z, const WhiteningTransform& t) {
  Mat m(1, z.size(), std::vector<double>(z.begin(), z.end()));
  return whiten(m, t).v;
}

Mat unwhiten(const Mat& zw, const WhiteningTransform& t) {
  check_dim(zw.cols, t, "unwhiten");
  const std::size_t d = t.dim();
  Mat out(zw.rows, d);
  kernels::parallel_map(zw.rows, [&](std::size_t i) {
    for (std::size_t k = 0; k < d; ++k) {
      double acc = t.mean[k];
      for (std::size_t j = 0; j < d; ++j) {
        if (t.degenerate[j]) continue;
        acc += t.eigvecs.at(k, j) * std::sqrt(t.eigvals[j]) * zw.at(i, j);
      }
      out.at(i, k) = acc;
    }
  });
  return out;
}

std::vector<double> unwhiten(std::span<const double> zw, const WhiteningTransform& t) {
  Mat m(1, zw.size(), std::vector<double>(zw.begin(), zw.end()));
  return unwhiten(m, t).v;
}

const std::vector<double>& spectrum(const WhiteningTransform& t) { return t.eigvals; }

}  // namespace wvae
