#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace greenview {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct GeoLocation {
  double latitude = 0.0;
  double longitude = 0.0;

  friend bool operator==(const GeoLocation&, const GeoLocation&) = default;
};

struct CameraPose {
  double heading = 0.0;  // degrees, [0, 360)
  double pitch = 0.0;    // degrees

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

/// Where an image came from. Filled by the manifest or the imagery client,
/// never parsed out of EXIF.
struct ImageMetadata {
  std::optional<std::string> city;
  std::optional<GeoLocation> location;
  std::optional<CameraPose> pose;

  friend bool operator==(const ImageMetadata&, const ImageMetadata&) = default;
};

/// Decoded 8-bit RGB raster, row-major, three bytes per pixel.
class RasterImage {
 public:
  /// Throws InvalidArgument when width or height is zero or the buffer
  /// length is not width * height * 3.
  RasterImage(std::string id, std::size_t width, std::size_t height,
              std::vector<std::uint8_t> pixels, ImageMetadata metadata = {});

  /// Uniformly colored image.
  static RasterImage filled(std::string id, std::size_t width, std::size_t height, Rgb color);

  const std::string& id() const noexcept { return id_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  const ImageMetadata& metadata() const noexcept { return metadata_; }

  Rgb at(std::size_t x, std::size_t y) const noexcept {
    const std::size_t i = (y * width_ + x) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }

  RasterImage with_id(std::string id) const;
  RasterImage with_metadata(ImageMetadata metadata) const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::string id_;
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
  ImageMetadata metadata_;
};

/// Binary per-pixel vertical-vegetation classification. One byte per pixel
/// holding 0 or 1.
class VegetationMask {
 public:
  VegetationMask(std::size_t width, std::size_t height, bool fill = false);

  /// Any nonzero byte is taken as vegetation. Throws InvalidArgument on a
  /// length mismatch or zero-sized dimensions.
  VegetationMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return bits_.size(); }
  std::size_t vegetation_pixel_count() const noexcept { return vegetation_count_; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  bool at(std::size_t x, std::size_t y) const noexcept { return bits_[y * width_ + x] != 0; }

  friend bool operator==(const VegetationMask& a, const VegetationMask& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> bits_;
  std::size_t vegetation_count_ = 0;
};

/// Decode a PNG or JPEG file. Alpha is dropped, grayscale expanded to RGB and
/// 16-bit samples truncated to their high byte. The image id is the file stem.
RasterImage decode_image(const std::filesystem::path& path);

/// Decode an in-memory PNG or JPEG buffer.
RasterImage decode_image_bytes(std::span<const std::uint8_t> bytes, std::string id);

/// Like decode_image, except palettized PNGs yield their palette indices
/// replicated into all three channels instead of the palette colors.
RasterImage decode_label_image(const std::filesystem::path& path);

/// Write an image as 8-bit RGB PNG.
void write_image_png(const RasterImage& image, const std::filesystem::path& path);

VegetationMask mask_from_label_image(const RasterImage& labels, std::uint8_t vegetation_value);

/// Single-channel 8-bit PNG, 0 = background, 255 = vegetation.
void mask_to_png(const VegetationMask& mask, const std::filesystem::path& path);
VegetationMask mask_from_png(const std::filesystem::path& path);

}  // namespace greenview
