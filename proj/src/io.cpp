#include "wvae/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wvae {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) {
    c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

namespace {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void bytes(std::span<const std::uint8_t> b) { raw(b.data(), b.size()); }
  void magic(const char m[4]) { raw(m, 4); }

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }
  double f64() { return read<double>(); }
  void magic(const char m[4], const char* format_name) {
    char got[4];
    take(got, 4);
    if (std::memcmp(got, m, 4) != 0) {
      throw std::runtime_error(std::string(format_name) + ": bad magic in " + what_);
    }
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    std::vector<std::uint8_t> out(n);
    take(out.data(), n);
    return out;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  template <typename T>
  T read() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw std::runtime_error("truncated file " + what_ + ": expected " +
                               std::to_string(pos_ + n) + " bytes, got " +
                               std::to_string(bytes_.size()));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Shortest decimal that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad number '" + std::string(s) + "' in " + where);
  }
  return v;
}

}  // namespace

// --- checkpoint --------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const MlpVae& model,
                     Objective objective) {
  ByteWriter w;
  w.magic("LLAB");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(objective));
  w.u32(static_cast<std::uint32_t>(model.arch.input_h));
  w.u32(static_cast<std::uint32_t>(model.arch.input_w));
  w.u32(static_cast<std::uint32_t>(model.arch.latent_dim));
  w.u32(static_cast<std::uint32_t>(model.arch.act));
  w.u32(static_cast<std::uint32_t>(model.arch.hidden.size()));
  for (std::size_t h : model.arch.hidden) w.u32(static_cast<std::uint32_t>(h));

  ByteWriter payload;
  for (const Tensor& p : model.parameters()) {
    for (double v : p.values()) payload.f64(v);
  }
  w.u64(payload.size() / 8);
  w.bytes(payload.data());
  w.u32(crc32(payload.data()));

  write_file(path, w.data());
}

std::pair<MlpVae, Objective> load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes, path.string());
  r.magic("LLAB", "checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path.string());
  }
  const auto objective = static_cast<Objective>(r.u32());

  VaeArch arch;
  arch.input_h = r.u32();
  arch.input_w = r.u32();
  arch.latent_dim = r.u32();
  arch.act = static_cast<Activation>(r.u32());
  const std::uint32_t n_hidden = r.u32();
  arch.hidden.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) arch.hidden.push_back(r.u32());

  const std::uint64_t param_count = r.u64();
  if (param_count != arch.parameter_count()) {
    throw std::runtime_error("checkpoint: parameter count " +
                             std::to_string(param_count) +
                             " does not match architecture (" +
                             std::to_string(arch.parameter_count()) + ")");
  }
  const std::size_t payload_start = r.pos();
  std::vector<std::uint8_t> payload = r.bytes(param_count * 8);
  (void)payload_start;
  const std::uint32_t stored = r.u32();
  const std::uint32_t actual = crc32(payload);
  if (stored != actual) {
    throw std::runtime_error("checkpoint: CRC mismatch in " + path.string());
  }

  // Zero-init then overwrite: Rng never consulted.
  Rng rng(0);
  MlpVae model = MlpVae::init(arch, rng);
  ByteReader pr(payload, path.string());
  for (Tensor& p : model.parameters()) {
    auto data = p.raw();
    for (double& v : data) v = pr.f64();
  }
  return {std::move(model), objective};
}

// --- whitening transform -----------------------------------------------------

void save_transform(const std::filesystem::path& path, const WhiteningTransform& t) {
  const std::size_t d = t.dim();
  ByteWriter w;
  w.magic("LWHT");
  w.u32(static_cast<std::uint32_t>(d));
  for (double v : t.mean) w.f64(v);
  for (double v : t.eigvals) w.f64(v);
  for (double v : t.eigvecs.v) w.f64(v);
  std::vector<std::uint8_t> mask((d + 7) / 8, 0);
  for (std::size_t j = 0; j < d; ++j) {
    if (t.degenerate[j]) mask[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  }
  w.bytes(mask);
  write_file(path, w.data());
}

WhiteningTransform load_transform(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes, path.string());
  r.magic("LWHT", "transform");
  const std::size_t d = r.u32();
  const std::size_t expected = 4 + 4 + 8 * d + 8 * d + 8 * d * d + (d + 7) / 8;
  if (bytes.size() != expected) {
    throw std::runtime_error("transform: file size " + std::to_string(bytes.size()) +
                             " does not match dimension " + std::to_string(d) +
                             " (expected " + std::to_string(expected) + ")");
  }
  WhiteningTransform t;
  t.mean.resize(d);
  for (double& v : t.mean) v = r.f64();
  t.eigvals.resize(d);
  for (double& v : t.eigvals) v = r.f64();
  t.eigvecs = Mat(d, d);
  for (double& v : t.eigvecs.v) v = r.f64();
  const auto mask = r.bytes((d + 7) / 8);
  t.degenerate.assign(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    t.degenerate[j] = (mask[j / 8] >> (j % 8)) & 1u;
  }
  return t;
}

// --- rendering ---------------------------------------------------------------

namespace {

constexpr double kGutter = 128.0 / 255.0;

GrayImage decode_tile(const MlpVae& model, std::span<const double> code) {
  Mat z(1, code.size(), std::vector<double>(code.begin(), code.end()));
  Mat logits = model.decode_logits(z);
  GrayImage tile;
  tile.height = model.arch.input_h;
  tile.width = model.arch.input_w;
  tile.pix.resize(logits.cols);
  for (std::size_t i = 0; i < logits.cols; ++i) {
    tile.pix[i] = 1.0 / (1.0 + std::exp(-logits.v[i]));
  }
  return tile;
}

void blit(GrayImage& dst, const GrayImage& tile, std::size_t row0, std::size_t col0) {
  for (std::size_t y = 0; y < tile.height; ++y) {
    std::copy(tile.pix.begin() + y * tile.width, tile.pix.begin() + (y + 1) * tile.width,
              dst.pix.begin() + (row0 + y) * dst.width + col0);
  }
}

}  // namespace

GrayImage traversal_grid(const MlpVae& model, const WhiteningTransform* transform,
                         std::span<const double> z_base,
                         std::span<const std::size_t> dims, double lo, double hi,
                         std::size_t steps, const GrayImage* anchor) {
  const std::size_t d = model.arch.latent_dim;
  if (z_base.size() != d) {
    throw std::invalid_argument("traversal_grid: z_base has " +
                                std::to_string(z_base.size()) + " entries, expected " +
                                std::to_string(d));
  }
  if (steps < 2) throw std::invalid_argument("traversal_grid: steps must be >= 2");
  if (dims.empty()) throw std::invalid_argument("traversal_grid: no dimensions given");
  for (std::size_t dim : dims) {
    if (dim >= d) {
      throw std::out_of_range("traversal_grid: dimension " + std::to_string(dim) +
                              " out of range [0," + std::to_string(d) + ")");
    }
  }
  if (transform && transform->dim() != d) {
    throw std::invalid_argument("traversal_grid: transform dimension mismatch");
  }

  auto decode_code = [&](std::span<const double> code) {
    if (!transform) return decode_tile(model, code);
    const auto raw = unwhiten(code, *transform);
    return decode_tile(model, raw);
  };

  GrayImage anchor_tile = anchor ? *anchor : decode_code(z_base);
  const std::size_t th = model.arch.input_h;
  const std::size_t tw = model.arch.input_w;
  if (anchor_tile.height != th || anchor_tile.width != tw) {
    throw std::invalid_argument("traversal_grid: anchor tile size mismatch");
  }

  const std::size_t tile_cols = steps + 1;
  GrayImage grid;
  grid.height = dims.size() * th + (dims.size() - 1);
  grid.width = tile_cols * tw + (tile_cols - 1);
  grid.pix.assign(grid.height * grid.width, kGutter);

  std::vector<double> code(z_base.begin(), z_base.end());
  for (std::size_t r = 0; r < dims.size(); ++r) {
    const std::size_t row0 = r * (th + 1);
    blit(grid, anchor_tile, row0, 0);
    for (std::size_t s = 0; s < steps; ++s) {
      code.assign(z_base.begin(), z_base.end());
      code[dims[r]] =
          lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps - 1);
      const GrayImage tile = decode_code(code);
      blit(grid, tile, row0, (s + 1) * (tw + 1));
    }
  }
  return grid;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  if (image.pix.size() != image.height * image.width) {
    throw std::invalid_argument("write_pgm: pixel buffer does not match dimensions");
  }
  for (double v : image.pix) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("write_pgm: intensity " + std::to_string(v) +
                              " outside [0,1]");
    }
  }
  std::string header = "P5\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + image.pix.size());
  for (double v : image.pix) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  write_file(path, bytes);
}

// --- CSV ---------------------------------------------------------------------

void write_curves(std::span<const EpochStats> curves, const std::filesystem::path& path) {
  if (curves.empty()) throw std::invalid_argument("write_curves: empty series");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "epoch,recon,kl,tc\n";
  for (std::size_t e = 0; e < curves.size(); ++e) {
    out << e << ',' << format_double(curves[e].recon) << ','
        << format_double(curves[e].kl) << ',' << format_double(curves[e].tc) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<EpochStats> read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch,recon,kl,tc") {
    throw std::runtime_error("curves csv: bad header in " + path.string());
  }
  std::vector<EpochStats> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // epoch index
    EpochStats stats;
    std::getline(ss, field, ',');
    stats.recon = parse_double(field, path.string());
    std::getline(ss, field, ',');
    stats.kl = parse_double(field, path.string());
    std::getline(ss, field, ',');
    stats.tc = parse_double(field, path.string());
    curves.push_back(stats);
  }
  return curves;
}

void write_spectrum(std::span<const double> eigvals, const std::filesystem::path& path) {
  if (eigvals.empty()) throw std::invalid_argument("write_spectrum: empty series");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "rank,eigenvalue\n";
  for (std::size_t i = 0; i < eigvals.size(); ++i) {
    out << i << ',' << format_double(eigvals[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "rank,eigenvalue") {
    throw std::runtime_error("spectrum csv: bad header in " + path.string());
  }
  std::vector<double> eigvals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // rank
    std::getline(ss, field, ',');
    eigvals.push_back(parse_double(field, path.string()));
  }
  return eigvals;
}

}  // namespace wvae
