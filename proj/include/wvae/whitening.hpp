#pragma once

#include <span>
#include <utility>
#include <vector>

#include "wvae/mat.hpp"

namespace wvae {

/// Eigenvalues below this are a collapsed latent direction: whitened
/// coordinates there are pinned to zero instead of dividing by ~0.
inline constexpr double kDegenerateEigenvalue = 1e-12;

/// PCA whitening fitted on a latent batch. Immutable after fit.
struct WhiteningTransform {
  std::vector<double> mean;     // column means of the fitted batch
  Mat eigvecs;                  // d x d, columns are eigenvectors
  std::vector<double> eigvals;  // descending, clamped to >= 0
  std::vector<bool> degenerate;

  std::size_t dim() const { return mean.size(); }
};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Sweeps until max |off-diagonal| < 1e-12 (at most max_sweeps, default 100),
/// then sorts pairs by descending eigenvalue and makes each eigenvector's
/// largest-magnitude component positive.
std::pair<std::vector<double>, Mat> jacobi_eigh(const Mat& s, int max_sweeps = 100);

/// Column means and (n-1)-normalized covariance of z, eigendecomposed.
/// Requires at least two rows.
WhiteningTransform fit_whitening(const Mat& z);

/// z_w = diag(eigvals)^(-1/2) U^T (z - mean); degenerate dimensions map to 0.
Mat whiten(const Mat& z, const WhiteningTransform& t);
std::vector<double> whiten(std::span<const double> z, const WhiteningTransform& t);

/// z = U diag(eigvals)^(1/2) z_w + mean; exact inverse of whiten on the
/// non-degenerate subspace.
Mat unwhiten(const Mat& zw, const WhiteningTransform& t);
std::vector<double> unwhiten(std::span<const double> zw, const WhiteningTransform& t);

/// The eigenvalue spectrum, largest first.
const std::vector<double>& spectrum(const WhiteningTransform& t);

}  // namespace wvae
