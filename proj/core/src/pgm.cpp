#include "tirdet/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace tirdet {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads one unsigned decimal token.
  long next_int(const char* field) {
    skip_separators();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) {
        throw PgmError(PgmErrorKind::MalformedHeader, std::string("PGM ") + field + " too large");
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw PgmError(PgmErrorKind::MalformedHeader,
                     std::string("PGM header: expected integer for ") + field);
    }
    return value;
  }

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }
  std::string_view bytes() const noexcept { return bytes_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

Image decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw PgmError(PgmErrorKind::UnsupportedMagic, "not a P2/P5 PGM file");
  }
  const bool ascii = bytes[1] == '2';
  HeaderReader reader(bytes);
  reader.advance(2);
  if (reader.pos() < bytes.size() &&
      !std::isspace(static_cast<unsigned char>(bytes[reader.pos()])) && bytes[reader.pos()] != '#') {
    throw PgmError(PgmErrorKind::UnsupportedMagic, "not a P2/P5 PGM file");
  }
  const long width = reader.next_int("width");
  const long height = reader.next_int("height");
  const long maxval = reader.next_int("maxval");
  if (width < 1 || height < 1) {
    throw PgmError(PgmErrorKind::MalformedHeader, "PGM dimensions must be positive");
  }
  if (maxval < 1 || maxval > 65535) {
    throw PgmError(PgmErrorKind::MalformedHeader, "PGM maxval must be in [1, 65535]");
  }
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> data(count);
  const double scale = static_cast<double>(maxval);

  auto check_sample = [&](long v) {
    if (v > maxval) {
      throw PgmError(PgmErrorKind::InvalidSample, "PGM sample exceeds maxval");
    }
  };

  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      reader.skip_separators();
      if (reader.pos() >= bytes.size()) {
        throw PgmError(PgmErrorKind::TruncatedPayload,
                       "PGM payload truncated after " + std::to_string(i) + " samples");
      }
      const long v = reader.next_int("sample");
      check_sample(v);
      data[i] = static_cast<double>(v) / scale;
    }
  } else {
    // Exactly one whitespace byte separates maxval from the raster.
    if (reader.pos() >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
      throw PgmError(PgmErrorKind::MalformedHeader, "PGM header not terminated by whitespace");
    }
    reader.advance(1);
    const std::size_t bps = maxval > 255 ? 2 : 1;
    const std::size_t need = count * bps;
    const std::size_t have = bytes.size() - reader.pos();
    if (have < need) {
      throw PgmError(PgmErrorKind::TruncatedPayload, "PGM payload truncated: need " +
                                                         std::to_string(need) + " bytes, have " +
                                                         std::to_string(have));
    }
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + reader.pos());
    for (std::size_t i = 0; i < count; ++i) {
      long v = bps == 2 ? (static_cast<long>(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
      check_sample(v);
      data[i] = static_cast<double>(v) / scale;
    }
  }
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

std::string encode_pgm(const Image& image, int maxval) {
  if (maxval != 255 && maxval != 65535) {
    throw InvalidArgument("PGM maxval must be 255 or 65535, got " + std::to_string(maxval));
  }
  if (!image.all_finite()) throw NumericError("cannot encode non-finite image");
  std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                    "\n" + std::to_string(maxval) + "\n";
  const std::size_t header = out.size();
  const std::size_t bps = maxval > 255 ? 2 : 1;
  out.resize(header + image.size() * bps);
  const double scale = maxval;
  std::size_t pos = header;
  for (double v : image.pixels()) {
    const double q = std::clamp(std::floor(v * scale + 0.5), 0.0, scale);
    const auto s = static_cast<unsigned>(q);
    if (bps == 2) {
      out[pos++] = static_cast<char>((s >> 8) & 0xFF);
    }
    out[pos++] = static_cast<char>(s & 0xFF);
  }
  return out;
}

Image read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void write_pgm(const Image& image, const std::filesystem::path& path, int maxval) {
  write_file(path, encode_pgm(image, maxval));
}

Mask mask_from_image(const Image& image) {
  std::vector<std::uint8_t> labels(image.size());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i] == 0.0) {
      labels[i] = 0;
    } else if (px[i] == 1.0) {
      labels[i] = 1;
    } else {
      throw PgmError(PgmErrorKind::InvalidSample, "mask sample is neither 0 nor maxval");
    }
  }
  return Mask(image.width(), image.height(), std::move(labels));
}

Image mask_to_image(const Mask& mask) {
  std::vector<double> data(mask.labels().begin(), mask.labels().end());
  return Image(mask.width(), mask.height(), std::move(data));
}

Mask read_mask(const std::filesystem::path& path) { return mask_from_image(read_pgm(path)); }

void write_mask(const Mask& mask, const std::filesystem::path& path) {
  write_pgm(mask_to_image(mask), path, 255);
}

}  // namespace tirdet
