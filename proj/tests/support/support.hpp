#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "greenview/dataset.hpp"
#include "greenview/geo.hpp"
#include "greenview/imaging.hpp"
#include "greenview/random.hpp"

namespace greenview::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture_dir();

inline constexpr Rgb kGreen{0, 255, 0};
inline constexpr Rgb kGray{128, 128, 128};

VegetationMask random_mask(SeededRng& rng, std::size_t width, std::size_t height,
                           double density = 0.5);

/// Background noise plus a few green rectangles of random size, so the
/// baseline sees both large clusters and specks.
RasterImage random_scene(SeededRng& rng, std::size_t width, std::size_t height,
                         std::string id = "scene");

/// Uniformly random RGB bytes.
RasterImage random_pixels(SeededRng& rng, std::size_t width, std::size_t height);

/// 100x100 gray image, a 30x30 pure green square at (10,10) and 20 single
/// green pixels no two of which touch (even diagonally) each other or the
/// square.
RasterImage speck_fixture();

struct SyntheticDatasetOptions {
  std::size_t images = 20;
  std::vector<std::string> cities{"north", "south"};
  std::size_t images_per_point = 3;
  std::size_t width = 48;
  std::size_t height = 32;
  bool with_labels = true;
  std::uint64_t seed = 1;
};

/// Writes images, label masks and manifest.csv under dir. Labels are the
/// unfiltered color threshold of each scene with a little noise, so the
/// baseline neither matches nor misses them completely.
SampleManifest write_synthetic_dataset(const std::filesystem::path& dir,
                                       const SyntheticDatasetOptions& options = {});

/// Manifest of `per_city` unsplit entries in each of `cities` cities. No files.
SampleManifest synthetic_manifest(std::size_t cities, std::size_t per_city);

/// Random polylines around the equator and mid latitudes, 1-6 segments of
/// 2-5 vertices each.
StreetNetwork random_network(SeededRng& rng);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Minimal local stand-in for a street-level imagery endpoint.
class StubImageryServer {
 public:
  /// Decides the HTTP status for a request; 200 serves a small PNG.
  using Policy = std::function<int(double lat, double lon, double heading)>;

  explicit StubImageryServer(Policy policy = {});
  ~StubImageryServer();
  StubImageryServer(const StubImageryServer&) = delete;
  StubImageryServer& operator=(const StubImageryServer&) = delete;

  std::string endpoint() const;
  std::size_t requests() const noexcept { return requests_.load(); }
  /// Query strings received, in arrival order.
  std::vector<std::string> queries() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace greenview::testing
