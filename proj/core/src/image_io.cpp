#include "ramdepth/image_io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>

namespace ramdepth::inline RAMDEPTH_PRECISION {

namespace {

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

// Whitespace-separated header tokens; '#' starts a comment to end of line.
class HeaderCursor {
 public:
  HeaderCursor(const std::vector<char>& bytes, const std::string& file) : bytes_(bytes), file_(file) {}

  std::string token(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError(file_ + ": missing " + what, start);
    return std::string(bytes_.data() + start, pos_ - start);
  }

  long long integer(const char* what) {
    const std::size_t at = peek_pos();
    const std::string t = token(what);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) throw ParseError(file_ + ": bad " + what + " '" + t + "'", at);
    return v;
  }

  double number(const char* what) {
    const std::size_t at = peek_pos();
    const std::string t = token(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError(file_ + ": bad " + what + " '" + t + "'", at);
    }
  }

  // Consumes the single whitespace byte that terminates a binary header.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ParseError(file_ + ": header not terminated by whitespace", pos_);
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::size_t peek_pos() {
    skip_space();
    return pos_;
  }
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<char>& bytes_;
  std::string file_;
  std::size_t pos_ = 0;
};

void require_image(const Tensor& t, std::int64_t channels, const char* what) {
  if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != channels) {
    throw ShapeError(std::string(what) + ": expected 1x" + std::to_string(channels) + "xHxW, got " +
                     shape_str(t.shape()));
  }
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  require_image(image, 3, "write_ppm");
  const std::int64_t h = image.dim(2), w = image.dim(3), plane = h * w;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << w << ' ' << h << "\n255\n";
  auto d = image.data();
  std::vector<unsigned char> row(static_cast<std::size_t>(3 * w));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      for (std::int64_t c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(d[static_cast<std::size_t>(c * plane + y * w + x)]), 0.0, 1.0);
        row[static_cast<std::size_t>(3 * x + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  HeaderCursor cur(bytes, path.string());
  if (cur.token("magic") != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)", 0);
  const auto w = cur.integer("width");
  const auto h = cur.integer("height");
  const auto maxval = cur.integer("maxval");
  if (w <= 0 || h <= 0) throw ParseError(path.string() + ": non-positive image size", cur.pos());
  if (maxval != 255) throw ParseError(path.string() + ": only maxval 255 is supported", cur.pos());
  cur.end_header();
  const std::size_t need = static_cast<std::size_t>(3 * w * h);
  if (bytes.size() - cur.pos() < need) {
    throw ParseError(path.string() + ": pixel data truncated", bytes.size());
  }
  std::vector<real> data(need);
  const std::int64_t plane = w * h;
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + cur.pos());
  for (std::int64_t i = 0; i < plane; ++i) {
    for (std::int64_t c = 0; c < 3; ++c) {
      data[static_cast<std::size_t>(c * plane + i)] = static_cast<real>(px[3 * i + c]) / real(255);
    }
  }
  return Tensor::from_data({1, 3, h, w}, std::move(data));
}

void write_pfm(const std::filesystem::path& path, const Tensor& depth) {
  require_image(depth, 1, "write_pfm");
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
  const std::int64_t h = depth.dim(2), w = depth.dim(3);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "Pf\n" << w << ' ' << h << "\n-1.0\n";
  auto d = depth.data();
  std::vector<float> row(static_cast<std::size_t>(w));
  for (std::int64_t y = h - 1; y >= 0; --y) {
    for (std::int64_t x = 0; x < w; ++x) row[static_cast<std::size_t>(x)] = static_cast<float>(d[static_cast<std::size_t>(y * w + x)]);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_pfm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  HeaderCursor cur(bytes, path.string());
  if (cur.token("magic") != "Pf") throw ParseError(path.string() + ": not a single-channel PFM (Pf)", 0);
  const auto w = cur.integer("width");
  const auto h = cur.integer("height");
  const double scale = cur.number("scale");
  if (w <= 0 || h <= 0) throw ParseError(path.string() + ": non-positive image size", cur.pos());
  if (scale == 0) throw ParseError(path.string() + ": zero scale", cur.pos());
  cur.end_header();
  const std::size_t count = static_cast<std::size_t>(w * h);
  if (bytes.size() - cur.pos() < count * sizeof(float)) {
    throw ParseError(path.string() + ": float payload truncated", bytes.size());
  }
  const bool big_endian = scale > 0;
  std::vector<real> data(count);
  const char* base = bytes.data() + cur.pos();
  for (std::int64_t fy = 0; fy < h; ++fy) {
    const std::int64_t y = h - 1 - fy;
    for (std::int64_t x = 0; x < w; ++x) {
      std::uint32_t bits;
      std::memcpy(&bits, base + (fy * w + x) * 4, 4);
      if (big_endian) bits = __builtin_bswap32(bits);
      data[static_cast<std::size_t>(y * w + x)] = static_cast<real>(std::bit_cast<float>(bits));
    }
  }
  return Tensor::from_data({1, 1, h, w}, std::move(data));
}

void write_ply(const std::filesystem::path& path, const std::vector<ColoredPoint>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  out << std::setprecision(9);
  for (const auto& p : points) {
    out << static_cast<float>(p.position.x()) << ' ' << static_cast<float>(p.position.y()) << ' '
        << static_cast<float>(p.position.z()) << ' ' << int(p.rgb[0]) << ' ' << int(p.rgb[1]) << ' '
        << int(p.rgb[2]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
