#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wvae/mat.hpp"
#include "wvae/rng.hpp"

namespace wvae {

inline constexpr std::size_t kCanvas = 32;
inline constexpr std::size_t kNumFactors = 5;

/// Generative factor grid: shape, scale, orientation, posX, posY.
/// The defaults give 3 * 6 * 8 * 16 * 16 = 36,864 combinations.
struct FactorSpace {
  std::array<std::size_t, kNumFactors> counts{3, 6, 8, 16, 16};

  static constexpr std::array<const char*, kNumFactors> names{
      "shape", "scale", "orientation", "posX", "posY"};

  std::size_t total() const {
    std::size_t t = 1;
    for (std::size_t c : counts) t *= c;
    return t;
  }
  void validate() const;

  /// Largest shape circumradius in pixels; positions are laid out so this
  /// radius always stays inside the canvas.
  double max_half_extent() const;
};

struct FactorTuple {
  std::array<std::size_t, kNumFactors> v{};

  bool operator==(const FactorTuple&) const = default;
};

/// Batch of grayscale images stored as bytes; intensity = byte / 255.
struct ImageBatch {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t image_size() const { return height * width; }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * image_size(), image_size()};
  }

  /// Rows of intensities in [0, 1].
  Mat to_mat() const;
  Mat to_mat(std::size_t first, std::size_t n) const;
  ImageBatch slice(std::size_t first, std::size_t n) const;
};

/// Rasterizes one factor combination onto a 32x32 binary canvas
/// (center-of-pixel inclusion after rotation and translation). Pure function.
std::vector<std::uint8_t> render_shape(const FactorTuple& f, const FactorSpace& space);

/// Every factor combination in lexicographic order, paired with its label.
std::pair<ImageBatch, std::vector<FactorTuple>> enumerate_dataset(const FactorSpace& space);

/// n images with factor k pinned to `value` and all other factors uniform.
std::pair<ImageBatch, std::vector<FactorTuple>> sample_fixed_factor(
    const FactorSpace& space, std::size_t k, std::size_t value, std::size_t n, Rng& rng);

/// Flat index of a tuple in enumerate_dataset order.
std::size_t tuple_index(const FactorTuple& f, const FactorSpace& space);
FactorTuple tuple_from_index(std::size_t index, const FactorSpace& space);

// --- IDX interchange (MNIST's container format) ---------------------------
// Images: magic 0x00000803, then big-endian u32 count/rows/cols, then bytes.
// Labels: magic 0x00000801, then big-endian u32 count, then bytes.

ImageBatch parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

struct IdxData {
  ImageBatch images;
  std::optional<std::vector<std::uint8_t>> labels;
};

IdxData load_idx(std::span<const std::uint8_t> image_bytes,
                 std::optional<std::span<const std::uint8_t>> label_bytes);
IdxData load_idx_files(const std::filesystem::path& image_path,
                       std::optional<std::filesystem::path> label_path);

std::vector<std::uint8_t> encode_idx_images(const ImageBatch& batch);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);
void save_idx_images(const ImageBatch& batch, const std::filesystem::path& path);

}  // namespace wvae
