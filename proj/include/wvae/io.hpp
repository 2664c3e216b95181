#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "wvae/nn.hpp"
#include "wvae/objectives.hpp"
#include "wvae/whitening.hpp"

namespace wvae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic "LLAB", version, architecture descriptor,
/// little-endian f64 parameter payload, CRC32 of the payload.
void save_checkpoint(const std::filesystem::path& path, const MlpVae& model,
                     Objective objective);
std::pair<MlpVae, Objective> load_checkpoint(const std::filesystem::path& path);

/// Binary transform file: magic "LWHT", d, mean, eigenvalues, eigenvectors
/// (row-major), degenerate-dimension bitmask.
void save_transform(const std::filesystem::path& path, const WhiteningTransform& t);
WhiteningTransform load_transform(const std::filesystem::path& path);

/// Grayscale raster with intensities in [0, 1].
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pix;
};

/// Latent-traversal figure: one row per entry of dims, an anchor tile in the
/// leftmost column, then `steps` decodes sweeping that coordinate across
/// [lo, hi] with the others held at z_base. When a transform is given,
/// z_base and the sweep live in whitened coordinates and each code passes
/// through unwhiten before decoding. Tiles are separated by 1-pixel
/// mid-gray gutters. The anchor defaults to the decode of z_base itself;
/// callers may override it (e.g. with the ground-truth image).
GrayImage traversal_grid(const MlpVae& model, const WhiteningTransform* transform,
                         std::span<const double> z_base,
                         std::span<const std::size_t> dims, double lo, double hi,
                         std::size_t steps, const GrayImage* anchor = nullptr);

/// Binary PGM (P5, maxval 255); byte = round(intensity * 255).
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

/// CSV "epoch,recon,kl,tc", one row per epoch starting at 0, doubles printed
/// as shortest round-trip decimals.
void write_curves(std::span<const EpochStats> curves, const std::filesystem::path& path);
std::vector<EpochStats> read_curves(const std::filesystem::path& path);

/// CSV "rank,eigenvalue" with ranks from 0 in the stored (descending) order.
void write_spectrum(std::span<const double> eigvals, const std::filesystem::path& path);
std::vector<double> read_spectrum(const std::filesystem::path& path);

/// IEEE CRC32 (reflected, 0xEDB88320), as used by the checkpoint format.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace wvae
