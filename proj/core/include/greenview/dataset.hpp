#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "greenview/imaging.hpp"

namespace greenview {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view text);

/// One row of the dataset manifest.
struct ManifestEntry {
  std::string id;
  std::string city;
  std::string image_path;
  std::optional<std::string> label_mask_path;
  std::optional<double> true_gvi;
  std::optional<GeoLocation> location;
  std::optional<CameraPose> pose;
  std::optional<std::string> point_id;
  std::optional<Split> split;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Dataset index. Ids are unique; relative paths resolve against base_dir
/// (the directory the manifest was loaded from).
class SampleManifest {
 public:
  SampleManifest() = default;

  /// Throws DuplicateId or MalformedRow when an entry breaks an invariant.
  explicit SampleManifest(std::vector<ManifestEntry> entries, std::filesystem::path base_dir = {});

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  std::filesystem::path resolve(const std::string& path) const;

  /// Entries of one split, or all entries when split is empty.
  SampleManifest subset(std::optional<Split> split) const;

  /// Equality compares entries only.
  friend bool operator==(const SampleManifest& a, const SampleManifest& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<ManifestEntry> entries_;
  std::filesystem::path base_dir_;
};

inline constexpr std::string_view kManifestHeader =
    "id,city,image_path,label_mask_path,true_gvi,lat,lon,heading,pitch,point_id,split";

SampleManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const SampleManifest& manifest, const std::filesystem::path& path);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Assigns every entry to train/val/test. With stratification each city is
/// apportioned to the splits in proportion to the requested sizes (exact when
/// the proportions allow it, within one entry otherwise); entries are
/// shuffled inside each city by the seed.
SampleManifest split_dataset(const SampleManifest& manifest, SplitSizes sizes, std::uint64_t seed,
                             bool stratify_by_city = true);

struct CityscapesOptions {
  std::filesystem::path labels_dir;
  std::filesystem::path images_dir;
  std::filesystem::path out_dir;
  std::uint8_t vegetation_label_id = 21;
  std::size_t workers = 1;
};

/// Collapses <labels_dir>/<city>/<name>[_gtFine]_labelIds.png rasters into binary
/// vegetation masks under <out_dir>/masks/<city>/<name>.png and returns the
/// manifest (rows sorted by id, true_gvi from the mask). The manifest is also
/// written to <out_dir>/manifest.csv.
SampleManifest convert_cityscapes(const CityscapesOptions& options, std::stop_token stop = {});

}  // namespace greenview
