#include "wvae/shapes.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "wvae/kernels.hpp"

namespace wvae {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Scale index -> circumradius in pixels. Index 5 gives 0.45 * canvas, which
// together with the position layout keeps every shape fully on canvas.
double half_extent(std::size_t scale_index) {
  return (0.15 + 0.06 * static_cast<double>(scale_index)) * static_cast<double>(kCanvas);
}

double position_coord(std::size_t index, std::size_t count, double margin) {
  const double lo = margin;
  const double hi = static_cast<double>(kCanvas) - margin;
  if (count <= 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(index) / static_cast<double>(count - 1);
}

bool inside_square(double x, double y, double r) {
  const double half_side = r / std::sqrt(2.0);
  return std::abs(x) <= half_side && std::abs(y) <= half_side;
}

bool inside_ellipse(double x, double y, double r) {
  const double nx = x / r;
  const double ny = y / (0.5 * r);
  return nx * nx + ny * ny <= 1.0;
}

bool inside_triangle(double x, double y, double r) {
  // Equilateral, circumradius r, one vertex up; CCW half-plane tests.
  const double s = std::sqrt(3.0) / 2.0;
  const double vx[3] = {0.0, -s * r, s * r};
  const double vy[3] = {r, -0.5 * r, -0.5 * r};
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const double ex = vx[j] - vx[i];
    const double ey = vy[j] - vy[i];
    if (ex * (y - vy[i]) - ey * (x - vx[i]) < 0.0) return false;
  }
  return true;
}

}  // namespace

void FactorSpace::validate() const {
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    if (counts[i] < 1) {
      throw std::invalid_argument(std::string("FactorSpace: factor ") + names[i] +
                                  " needs at least one value");
    }
  }
  if (counts[0] > 3) {
    throw std::invalid_argument("FactorSpace: only 3 shapes are defined, got " +
                                std::to_string(counts[0]));
  }
  if (max_half_extent() > 0.5 * static_cast<double>(kCanvas)) {
    throw std::invalid_argument(
        "FactorSpace: scale count " + std::to_string(counts[1]) +
        " pushes the largest shape outside the canvas (max 6 scales)");
  }
}

double FactorSpace::max_half_extent() const { return half_extent(counts[1] - 1); }

Mat ImageBatch::to_mat() const { return to_mat(0, count); }

Mat ImageBatch::to_mat(std::size_t first, std::size_t n) const {
  if (first + n > count) throw std::out_of_range("ImageBatch::to_mat: range");
  Mat out(n, image_size());
  kernels::parallel_map(n * image_size(), [&](std::size_t i) {
    out.v[i] = static_cast<double>(pixels[first * image_size() + i]) / 255.0;
  });
  return out;
}

ImageBatch ImageBatch::slice(std::size_t first, std::size_t n) const {
  if (first + n > count) throw std::out_of_range("ImageBatch::slice: range");
  ImageBatch out;
  out.count = n;
  out.height = height;
  out.width = width;
  out.pixels.assign(pixels.begin() + first * image_size(),
                    pixels.begin() + (first + n) * image_size());
  return out;
}

std::vector<std::uint8_t> render_shape(const FactorTuple& f, const FactorSpace& space) {
  space.validate();
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    if (f.v[i] >= space.counts[i]) {
      throw std::out_of_range(std::string("render_shape: ") + FactorSpace::names[i] +
                              " index " + std::to_string(f.v[i]) + " out of range [0," +
                              std::to_string(space.counts[i]) + ")");
    }
  }

  const std::size_t shape_kind = f.v[0];
  const double r = half_extent(f.v[1]);
  const double theta =
      2.0 * kPi * static_cast<double>(f.v[2]) / static_cast<double>(space.counts[2]);
  const double margin = space.max_half_extent();
  const double cx = position_coord(f.v[3], space.counts[3], margin);
  const double cy = position_coord(f.v[4], space.counts[4], margin);

  const double c = std::cos(theta);
  const double s = std::sin(theta);

  std::vector<std::uint8_t> img(kCanvas * kCanvas, 0);
  for (std::size_t py = 0; py < kCanvas; ++py) {
    for (std::size_t px = 0; px < kCanvas; ++px) {
      const double dx = (static_cast<double>(px) + 0.5) - cx;
      const double dy = (static_cast<double>(py) + 0.5) - cy;
      // rotate the pixel back into the shape frame
      const double x = c * dx + s * dy;
      const double y = -s * dx + c * dy;
      bool hit = false;
      switch (shape_kind) {
        case 0: hit = inside_square(x, y, r); break;
        case 1: hit = inside_ellipse(x, y, r); break;
        case 2: hit = inside_triangle(x, y, r); break;
        default: break;
      }
      if (hit) img[py * kCanvas + px] = 255;
    }
  }
  return img;
}

std::size_t tuple_index(const FactorTuple& f, const FactorSpace& space) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    idx = idx * space.counts[i] + f.v[i];
  }
  return idx;
}

FactorTuple tuple_from_index(std::size_t index, const FactorSpace& space) {
  FactorTuple f;
  for (std::size_t i = kNumFactors; i-- > 0;) {
    f.v[i] = index % space.counts[i];
    index /= space.counts[i];
  }
  return f;
}

std::pair<ImageBatch, std::vector<FactorTuple>> enumerate_dataset(const FactorSpace& space) {
  space.validate();
  const std::size_t total = space.total();
  std::vector<FactorTuple> labels(total);
  for (std::size_t i = 0; i < total; ++i) labels[i] = tuple_from_index(i, space);

  ImageBatch batch;
  batch.count = total;
  batch.height = kCanvas;
  batch.width = kCanvas;
  batch.pixels.resize(total * kCanvas * kCanvas);
  kernels::parallel_map(total, [&](std::size_t i) {
    const auto img = render_shape(labels[i], space);
    std::memcpy(batch.pixels.data() + i * img.size(), img.data(), img.size());
  });
  return {std::move(batch), std::move(labels)};
}

std::pair<ImageBatch, std::vector<FactorTuple>> sample_fixed_factor(
    const FactorSpace& space, std::size_t k, std::size_t value, std::size_t n, Rng& rng) {
  space.validate();
  if (k >= kNumFactors) {
    throw std::out_of_range("sample_fixed_factor: factor index " + std::to_string(k));
  }
  if (value >= space.counts[k]) {
    throw std::out_of_range("sample_fixed_factor: value " + std::to_string(value) +
                            " out of range for " + FactorSpace::names[k]);
  }
  std::vector<FactorTuple> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kNumFactors; ++j) {
      labels[i].v[j] = (j == k) ? value : rng.bounded(space.counts[j]);
    }
  }
  ImageBatch batch;
  batch.count = n;
  batch.height = kCanvas;
  batch.width = kCanvas;
  batch.pixels.resize(n * kCanvas * kCanvas);
  kernels::parallel_map(n, [&](std::size_t i) {
    const auto img = render_shape(labels[i], space);
    std::memcpy(batch.pixels.data() + i * img.size(), img.data(), img.size());
  });
  return {std::move(batch), std::move(labels)};
}

// --- IDX -------------------------------------------------------------------

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

void check_length(std::size_t actual, std::size_t expected, const char* what) {
  if (actual < expected) {
    throw std::runtime_error(std::string("idx: truncated ") + what + ", expected " +
                             std::to_string(expected) + " bytes, got " +
                             std::to_string(actual));
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ImageBatch parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_length(bytes.size(), 16, "image header");
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != 0x00000803u) {
    throw std::runtime_error("idx: bad image magic " + hex32(magic) +
                             ", expected 0x00000803");
  }
  ImageBatch batch;
  batch.count = read_be32(bytes.data() + 4);
  batch.height = read_be32(bytes.data() + 8);
  batch.width = read_be32(bytes.data() + 12);
  const std::size_t payload = batch.count * batch.image_size();
  check_length(bytes.size() - 16, payload, "image payload");
  batch.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + payload);
  return batch;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_length(bytes.size(), 8, "label header");
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != 0x00000801u) {
    throw std::runtime_error("idx: bad label magic " + hex32(magic) +
                             ", expected 0x00000801");
  }
  const std::size_t count = read_be32(bytes.data() + 4);
  check_length(bytes.size() - 8, count, "label payload");
  return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

IdxData load_idx(std::span<const std::uint8_t> image_bytes,
                 std::optional<std::span<const std::uint8_t>> label_bytes) {
  IdxData data;
  data.images = parse_idx_images(image_bytes);
  if (label_bytes) {
    data.labels = parse_idx_labels(*label_bytes);
    if (data.labels->size() != data.images.count) {
      throw std::runtime_error("idx: image count " + std::to_string(data.images.count) +
                               " does not match label count " +
                               std::to_string(data.labels->size()));
    }
  }
  return data;
}

IdxData load_idx_files(const std::filesystem::path& image_path,
                       std::optional<std::filesystem::path> label_path) {
  const auto image_bytes = read_file(image_path);
  if (!label_path) return load_idx(image_bytes, std::nullopt);
  const auto label_bytes = read_file(*label_path);
  return load_idx(image_bytes, std::span<const std::uint8_t>(label_bytes));
}

std::vector<std::uint8_t> encode_idx_images(const ImageBatch& batch) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + batch.pixels.size());
  write_be32(out, 0x00000803u);
  write_be32(out, static_cast<std::uint32_t>(batch.count));
  write_be32(out, static_cast<std::uint32_t>(batch.height));
  write_be32(out, static_cast<std::uint32_t>(batch.width));
  out.insert(out.end(), batch.pixels.begin(), batch.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, 0x00000801u);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

void save_idx_images(const ImageBatch& batch, const std::filesystem::path& path) {
  const auto bytes = encode_idx_images(batch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace wvae
