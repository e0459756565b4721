#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tirdet/error.hpp"
#include "tirdet/image.hpp"

namespace tirdet {

enum class PgmErrorKind {
  UnsupportedMagic,
  MalformedHeader,
  TruncatedPayload,
  InvalidSample,
};

/// Raised for a readable file whose contents are not a valid PGM.
class PgmError : public IoError {
 public:
  PgmError(PgmErrorKind kind, const std::string& what) : IoError(what), kind_(kind) {}
  PgmErrorKind kind() const noexcept { return kind_; }

 private:
  PgmErrorKind kind_;
};

/// Decode P2 or P5 bytes. Samples are divided by maxval.
Image decode_pgm(std::string_view bytes);

/// Encode as binary P5. Each sample is floor(v * maxval + 0.5) clamped to
/// [0, maxval]; maxval must be 255 or 65535.
std::string encode_pgm(const Image& image, int maxval = 255);

Image read_pgm(const std::filesystem::path& path);
void write_pgm(const Image& image, const std::filesystem::path& path, int maxval = 255);

/// Masks live on disk as 8-bit PGM with samples {0, 255}. On read, 0 maps to
/// 0 and maxval maps to 1; anything else is an InvalidSample error.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const Mask& mask, const std::filesystem::path& path);

Mask mask_from_image(const Image& image);
Image mask_to_image(const Mask& mask);

}  // namespace tirdet
