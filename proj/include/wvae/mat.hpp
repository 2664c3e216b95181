#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wvae {

/// Plain row-major matrix of doubles. Carrier for latent batches and the
/// whitening algebra; no gradient machinery attached.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  Mat(std::size_t r, std::size_t c, std::vector<double> data)
      : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != rows * cols) {
      throw std::invalid_argument("Mat: data length " + std::to_string(v.size()) +
                                  " does not match " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
    }
  }

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {v.data() + r * cols, cols};
  }

  bool empty() const { return rows == 0 || cols == 0; }
};

}  // namespace wvae
