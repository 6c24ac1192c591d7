#include "greenview/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "greenview/error.hpp"

namespace greenview {

namespace {

enum class Format { Png, Jpeg, Unknown };

Format sniff(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= sizeof(kPng) && std::equal(std::begin(kPng), std::end(kPng), bytes.begin()))
    return Format::Png;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    return Format::Jpeg;
  return Format::Unknown;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::UnreadableFile, "read failed for " + path.string());
  return bytes;
}

cv::Mat decode_mat(std::span<const std::uint8_t> bytes, const std::string& what) {
  if (sniff(bytes) == Format::Unknown)
    throw Error(ErrorCode::UnsupportedFormat, what + " is neither PNG nor JPEG");
  cv::Mat mat;
  try {
    const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                         const_cast<std::uint8_t*>(bytes.data()));
    mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::CorruptImage, what + ": " + e.what());
  }
  if (mat.empty() || mat.rows <= 0 || mat.cols <= 0)
    throw Error(ErrorCode::CorruptImage, "failed to decode " + what);
  return mat;
}

// Normalizes any decoded Mat to packed 8-bit RGB.
std::vector<std::uint8_t> to_rgb8(const cv::Mat& source) {
  cv::Mat mat = source;
  if (mat.depth() == CV_16U) {
    // Keep the high byte: 16-bit values are truncated, not rounded.
    cv::Mat exact(mat.size(), CV_MAKETYPE(CV_8U, mat.channels()));
    const int n = mat.rows * mat.cols * mat.channels();
    const cv::Mat flat_in = mat.isContinuous() ? mat : mat.clone();
    const auto* in = flat_in.ptr<std::uint16_t>();
    auto* out = exact.ptr<std::uint8_t>();
    for (int i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(in[i] >> 8);
    mat = exact;
  } else if (mat.depth() != CV_8U) {
    throw Error(ErrorCode::UnsupportedFormat, "unsupported sample depth");
  }

  const auto w = static_cast<std::size_t>(mat.cols);
  const auto h = static_cast<std::size_t>(mat.rows);
  const int channels = mat.channels();
  std::vector<std::uint8_t> rgb(w * h * 3);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      auto* dst = &rgb[(y * w + x) * 3];
      const auto* src = row + x * static_cast<std::size_t>(channels);
      if (channels == 1 || channels == 2) {
        dst[0] = dst[1] = dst[2] = src[0];
      } else {
        // OpenCV orders channels BGR(A).
        dst[0] = src[2];
        dst[1] = src[1];
        dst[2] = src[0];
      }
    }
  }
  return rgb;
}

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t count) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + count > state->bytes.size()) png_error(png, "unexpected end of data");
  std::memcpy(out, state->bytes.data() + state->offset, count);
  state->offset += count;
}

void png_silent_warning(png_structp, png_const_charp) {}

struct PaletteRaster {
  bool is_palette = false;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> indices;
  std::vector<png_bytep> rows;
};

// Reads the palette index raster of a palettized PNG. is_palette stays false
// for every other color type. Everything longjmp may observe lives on the
// heap so no automatic object is modified between setjmp and longjmp.
std::unique_ptr<PaletteRaster> read_palette_indices(std::span<const std::uint8_t> bytes) {
  auto result = std::make_unique<PaletteRaster>();
  auto state = std::make_unique<PngReadState>(PngReadState{bytes, 0});
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           png_silent_warning);
  if (png == nullptr) throw Error(ErrorCode::CorruptImage, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::CorruptImage, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptImage, "malformed PNG");
  }
  png_set_read_fn(png, state.get(), png_read_from_span);
  png_read_info(png, info);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) {
    result->is_palette = true;
    result->width = png_get_image_width(png, info);
    result->height = png_get_image_height(png, info);
    if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
    png_read_update_info(png, info);
    result->indices.resize(result->width * result->height);
    result->rows.resize(result->height);
    for (std::size_t y = 0; y < result->height; ++y)
      result->rows[y] = result->indices.data() + y * result->width;
    png_read_image(png, result->rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return result;
}

}  // namespace

RasterImage::RasterImage(std::string id, std::size_t width, std::size_t height,
                         std::vector<std::uint8_t> pixels, ImageMetadata metadata)
    : id_(std::move(id)),
      width_(width),
      height_(height),
      pixels_(std::move(pixels)),
      metadata_(std::move(metadata)) {
  if (width_ == 0 || height_ == 0)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (pixels_.size() != width_ * height_ * 3)
    throw Error(ErrorCode::InvalidArgument, "pixel buffer length disagrees with dimensions");
}

RasterImage RasterImage::filled(std::string id, std::size_t width, std::size_t height, Rgb color) {
  std::vector<std::uint8_t> pixels(width * height * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = color.r;
    pixels[i + 1] = color.g;
    pixels[i + 2] = color.b;
  }
  return RasterImage(std::move(id), width, height, std::move(pixels));
}

RasterImage RasterImage::with_id(std::string id) const {
  RasterImage copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

RasterImage RasterImage::with_metadata(ImageMetadata metadata) const {
  RasterImage copy = *this;
  copy.metadata_ = std::move(metadata);
  return copy;
}

VegetationMask::VegetationMask(std::size_t width, std::size_t height, bool fill)
    : VegetationMask(width, height, std::vector<std::uint8_t>(width * height, fill ? 1 : 0)) {}

VegetationMask::VegetationMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width_ == 0 || height_ == 0)
    throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
  if (bits_.size() != width_ * height_)
    throw Error(ErrorCode::InvalidArgument, "mask buffer length disagrees with dimensions");
  for (auto& b : bits_) {
    b = b != 0 ? 1 : 0;
    vegetation_count_ += b;
  }
}

RasterImage decode_image_bytes(std::span<const std::uint8_t> bytes, std::string id) {
  const cv::Mat mat = decode_mat(bytes, id.empty() ? std::string("buffer") : id);
  const auto w = static_cast<std::size_t>(mat.cols);
  const auto h = static_cast<std::size_t>(mat.rows);
  return RasterImage(std::move(id), w, h, to_rgb8(mat));
}

RasterImage decode_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const cv::Mat mat = decode_mat(bytes, path.string());
  return RasterImage(path.stem().string(), static_cast<std::size_t>(mat.cols),
                     static_cast<std::size_t>(mat.rows), to_rgb8(mat));
}

RasterImage decode_label_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (sniff(bytes) == Format::Png) {
    const auto palette = read_palette_indices(bytes);
    if (palette->is_palette) {
      const auto& indices = palette->indices;
      std::vector<std::uint8_t> rgb(indices.size() * 3);
      for (std::size_t i = 0; i < indices.size(); ++i)
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = indices[i];
      return RasterImage(path.stem().string(), palette->width, palette->height, std::move(rgb));
    }
  }
  const cv::Mat mat = decode_mat(bytes, path.string());
  return RasterImage(path.stem().string(), static_cast<std::size_t>(mat.cols),
                     static_cast<std::size_t>(mat.rows), to_rgb8(mat));
}

namespace {

void write_png(const cv::Mat& mat, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::vector<std::uint8_t> encoded;
  bool ok = false;
  try {
    ok = cv::imencode(".png", mat, encoded);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + e.what());
  }
  if (!ok) throw Error(ErrorCode::IoError, "PNG encode failed for " + path.string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(encoded.data()),
            static_cast<std::streamsize>(encoded.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace

void write_image_png(const RasterImage& image, const std::filesystem::path& path) {
  cv::Mat bgr(static_cast<int>(image.height()), static_cast<int>(image.width()), CV_8UC3);
  const auto px = image.pixels();
  auto* out = bgr.ptr<std::uint8_t>();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    out[i] = px[i + 2];
    out[i + 1] = px[i + 1];
    out[i + 2] = px[i];
  }
  write_png(bgr, path);
}

VegetationMask mask_from_label_image(const RasterImage& labels, std::uint8_t vegetation_value) {
  const auto px = labels.pixels();
  std::vector<std::uint8_t> bits(labels.pixel_count());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const auto r = px[3 * i];
    if (px[3 * i + 1] != r || px[3 * i + 2] != r)
      throw Error(ErrorCode::NotALabelImage,
                  labels.id() + ": channels differ at pixel " + std::to_string(i));
    bits[i] = r == vegetation_value ? 1 : 0;
  }
  return VegetationMask(labels.width(), labels.height(), std::move(bits));
}

void mask_to_png(const VegetationMask& mask, const std::filesystem::path& path) {
  cv::Mat gray(static_cast<int>(mask.height()), static_cast<int>(mask.width()), CV_8UC1);
  auto* out = gray.ptr<std::uint8_t>();
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits[i] ? 255 : 0;
  write_png(gray, path);
}

VegetationMask mask_from_png(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const cv::Mat mat = decode_mat(bytes, path.string());
  if (mat.depth() != CV_8U || mat.channels() != 1)
    throw Error(ErrorCode::NonBinaryMask, path.string() + " is not a single-channel 8-bit PNG");
  const auto w = static_cast<std::size_t>(mat.cols);
  const auto h = static_cast<std::size_t>(mat.rows);
  std::vector<std::uint8_t> bits(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      const auto v = row[x];
      if (v != 0 && v != 255)
        throw Error(ErrorCode::NonBinaryMask, path.string() + ": value " + std::to_string(v) +
                                                  " at (" + std::to_string(x) + "," +
                                                  std::to_string(y) + ")");
      bits[y * w + x] = v == 255 ? 1 : 0;
    }
  }
  return VegetationMask(w, h, std::move(bits));
}

}  // namespace greenview
