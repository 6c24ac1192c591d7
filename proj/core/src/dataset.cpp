#include "greenview/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "greenview/csv.hpp"
#include "greenview/error.hpp"
#include "greenview/gvi.hpp"
#include "greenview/random.hpp"
#include "greenview/worker_pool.hpp"

namespace greenview {

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  return std::nullopt;
}

namespace {

void check_entry(const ManifestEntry& e, const std::string& where) {
  if (e.id.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty id");
  if (e.true_gvi && !(*e.true_gvi >= 0.0 && *e.true_gvi <= 100.0))
    throw Error(ErrorCode::MalformedRow, where + ": true_gvi outside [0,100]");
  if (e.location) {
    const auto& l = *e.location;
    if (!(l.latitude >= -90.0 && l.latitude <= 90.0 && l.longitude >= -180.0 &&
          l.longitude <= 180.0))
      throw Error(ErrorCode::MalformedRow, where + ": coordinates out of range");
  }
  if (e.pose && !(e.pose->heading >= 0.0 && e.pose->heading < 360.0))
    throw Error(ErrorCode::MalformedRow, where + ": heading outside [0,360)");
}

}  // namespace

SampleManifest::SampleManifest(std::vector<ManifestEntry> entries, std::filesystem::path base_dir)
    : entries_(std::move(entries)), base_dir_(std::move(base_dir)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    check_entry(e, "entry '" + e.id + "'");
    if (!seen.insert(e.id).second) throw Error(ErrorCode::DuplicateId, "id '" + e.id + "'");
  }
}

std::filesystem::path SampleManifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

SampleManifest SampleManifest::subset(std::optional<Split> split) const {
  if (!split) return *this;
  std::vector<ManifestEntry> kept;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(kept),
               [&](const auto& e) { return e.split == split; });
  return SampleManifest(std::move(kept), base_dir_);
}

namespace {

constexpr std::size_t kColumnCount = 11;
constexpr std::array<std::string_view, kColumnCount> kColumns = {
    "id", "city", "image_path", "label_mask_path", "true_gvi", "lat",
    "lon", "heading", "pitch", "point_id", "split"};

std::optional<std::string> optional_text(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

std::optional<double> optional_number(const std::string& s, std::string_view column,
                                       const std::string& where) {
  if (s.empty()) return std::nullopt;
  auto v = csv::parse_double(s);
  if (!v)
    throw Error(ErrorCode::MalformedRow,
                where + ": column " + std::string(column) + " is not a number: '" + s + "'");
  return v;
}

}  // namespace

SampleManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());

  auto header = csv::read_record(in);
  if (!header) throw Error(ErrorCode::MissingColumn, path.string() + " has no header");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0)
    header->front().erase(0, 3);
  std::array<std::size_t, kColumnCount> index{};
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto it = std::find(header->begin(), header->end(), kColumns[c]);
    if (it == header->end())
      throw Error(ErrorCode::MissingColumn, "column '" + std::string(kColumns[c]) + "'");
    index[c] = static_cast<std::size_t>(it - header->begin());
  }

  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::size_t row = 1;
  while (auto record = csv::read_record(in)) {
    ++row;
    if (record->size() == 1 && record->front().empty()) continue;
    const std::string where = path.filename().string() + " row " + std::to_string(row);
    if (record->size() != header->size())
      throw Error(ErrorCode::MalformedRow, where + ": expected " + std::to_string(header->size()) +
                                               " fields, got " + std::to_string(record->size()));
    auto field = [&](std::size_t c) -> const std::string& { return (*record)[index[c]]; };

    ManifestEntry e;
    e.id = field(0);
    e.city = field(1);
    e.image_path = field(2);
    e.label_mask_path = optional_text(field(3));
    e.true_gvi = optional_number(field(4), kColumns[4], where);
    const auto lat = optional_number(field(5), kColumns[5], where);
    const auto lon = optional_number(field(6), kColumns[6], where);
    if (lat.has_value() != lon.has_value())
      throw Error(ErrorCode::MalformedRow, where + ": lat and lon must both be set or both empty");
    if (lat) e.location = GeoLocation{*lat, *lon};
    const auto heading = optional_number(field(7), kColumns[7], where);
    const auto pitch = optional_number(field(8), kColumns[8], where);
    if (heading.has_value() != pitch.has_value())
      throw Error(ErrorCode::MalformedRow,
                  where + ": heading and pitch must both be set or both empty");
    if (heading) e.pose = CameraPose{*heading, *pitch};
    e.point_id = optional_text(field(9));
    if (!field(10).empty()) {
      e.split = parse_split(field(10));
      if (!e.split) throw Error(ErrorCode::MalformedRow, where + ": unknown split '" + field(10) + "'");
    }
    if (e.image_path.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty image_path");
    check_entry(e, where);
    if (!seen.insert(e.id).second)
      throw Error(ErrorCode::DuplicateId, where + ": id '" + e.id + "'");
    entries.push_back(std::move(e));
  }
  return SampleManifest(std::move(entries), path.parent_path());
}

void save_manifest(const SampleManifest& manifest, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << kManifestHeader << '\n';
  auto number = [](const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
  };
  for (const auto& e : manifest.entries()) {
    csv::write_record(
        out, {e.id, e.city, e.image_path, e.label_mask_path.value_or(""), number(e.true_gvi),
              e.location ? csv::format_double(e.location->latitude) : "",
              e.location ? csv::format_double(e.location->longitude) : "",
              e.pose ? csv::format_double(e.pose->heading) : "",
              e.pose ? csv::format_double(e.pose->pitch) : "", e.point_id.value_or(""),
              e.split ? std::string(to_string(*e.split)) : ""});
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SampleManifest split_dataset(const SampleManifest& manifest, SplitSizes sizes, std::uint64_t seed,
                             bool stratify_by_city) {
  const auto& entries = manifest.entries();
  const std::size_t n = entries.size();
  if (sizes.train + sizes.val + sizes.test != n)
    throw Error(ErrorCode::SizeMismatch, "split sizes sum to " +
                                             std::to_string(sizes.train + sizes.val + sizes.test) +
                                             " but the manifest has " + std::to_string(n) +
                                             " entries");
  for (const auto& e : entries)
    if (e.split) throw Error(ErrorCode::AlreadySplit, "entry '" + e.id + "' already has a split");

  SeededRng rng(seed);
  // Final order in which entries are handed out: train first, then val, then test.
  std::vector<std::size_t> order;
  order.reserve(n);

  if (stratify_by_city) {
    std::map<std::string, std::vector<std::size_t>> by_city;
    for (std::size_t i = 0; i < n; ++i) by_city[entries[i].city].push_back(i);

    // Rank r of a city with m entries sits at fraction (2r + 1) / 2m. Merging
    // all cities on that fraction interleaves them proportionally, so any
    // prefix of the merged order holds each city in proportion to its size.
    struct Slot {
      std::size_t rank;
      std::size_t city_size;
      std::size_t city_index;
      std::size_t entry;
    };
    std::vector<Slot> slots;
    std::size_t city_index = 0;
    for (auto& [city, members] : by_city) {
      std::sort(members.begin(), members.end(),
                [&](std::size_t a, std::size_t b) { return entries[a].id < entries[b].id; });
      rng.shuffle(std::span<std::size_t>(members));
      for (std::size_t r = 0; r < members.size(); ++r)
        slots.push_back({r, members.size(), city_index, members[r]});
      ++city_index;
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
      const auto lhs = (2 * a.rank + 1) * b.city_size;
      const auto rhs = (2 * b.rank + 1) * a.city_size;
      if (lhs != rhs) return lhs < rhs;
      return a.city_index < b.city_index;
    });
    for (const auto& s : slots) order.push_back(s.entry);
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return entries[a].id < entries[b].id; });
    rng.shuffle(std::span<std::size_t>(order));
  }

  std::vector<ManifestEntry> out = entries;
  for (std::size_t k = 0; k < n; ++k) {
    const Split s = k < sizes.train               ? Split::Train
                    : k < sizes.train + sizes.val ? Split::Val
                                                  : Split::Test;
    out[order[k]].split = s;
  }
  return SampleManifest(std::move(out), manifest.base_dir());
}

namespace {

constexpr std::string_view kLabelSuffix = "_labelIds.png";
constexpr std::string_view kImageSuffix = "_leftImg8bit.png";

struct LabelJob {
  std::string city;
  std::string name;
  std::filesystem::path label;
  std::filesystem::path image;
};

std::filesystem::path relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  const auto abs_p = std::filesystem::absolute(p).lexically_normal();
  const auto abs_base = std::filesystem::absolute(base).lexically_normal();
  auto rel = abs_p.lexically_relative(abs_base);
  return rel.empty() ? abs_p : rel;
}

}  // namespace

SampleManifest convert_cityscapes(const CityscapesOptions& options, std::stop_token stop) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(options.labels_dir))
    throw Error(ErrorCode::UnreadableFile, "labels directory " + options.labels_dir.string());

  std::vector<LabelJob> jobs;
  for (const auto& city_dir : fs::directory_iterator(options.labels_dir)) {
    if (!city_dir.is_directory()) continue;
    const std::string city = city_dir.path().filename().string();
    for (const auto& file : fs::directory_iterator(city_dir.path())) {
      const std::string filename = file.path().filename().string();
      if (!file.is_regular_file() || filename.size() <= kLabelSuffix.size() ||
          filename.compare(filename.size() - kLabelSuffix.size(), kLabelSuffix.size(),
                           kLabelSuffix) != 0)
        continue;
      LabelJob job;
      job.city = city;
      job.name = filename.substr(0, filename.size() - kLabelSuffix.size());
      for (std::string_view annotation : {"_gtFine", "_gtCoarse"})
        if (job.name.size() > annotation.size() && job.name.ends_with(annotation))
          job.name.resize(job.name.size() - annotation.size());
      job.label = file.path();
      job.image = options.images_dir / city / (job.name + std::string(kImageSuffix));
      if (!fs::exists(job.image))
        throw Error(ErrorCode::OrphanLabel,
                    job.label.string() + " has no image at " + job.image.string());
      jobs.push_back(std::move(job));
    }
  }
  std::sort(jobs.begin(), jobs.end(),
            [](const LabelJob& a, const LabelJob& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < jobs.size(); ++i)
    if (jobs[i].name == jobs[i - 1].name)
      throw Error(ErrorCode::DuplicateId, "label name '" + jobs[i].name + "' in two cities");

  const std::function<ManifestEntry(std::size_t)> task = [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto labels = decode_label_image(job.label);
    const auto mask = mask_from_label_image(labels, options.vegetation_label_id);
    const fs::path mask_rel = fs::path("masks") / job.city / (job.name + ".png");
    mask_to_png(mask, options.out_dir / mask_rel);
    ManifestEntry e;
    e.id = job.name;
    e.city = job.city;
    e.image_path = relative_to(job.image, options.out_dir).generic_string();
    e.label_mask_path = mask_rel.generic_string();
    e.true_gvi = gvi_of_mask(mask, Source::ManualLabel, job.name).value();
    return e;
  };
  auto entries = parallel_map<ManifestEntry>(jobs.size(), options.workers, task, stop);

  SampleManifest manifest(std::move(entries), options.out_dir);
  save_manifest(manifest, options.out_dir / "manifest.csv");
  return manifest;
}

}  // namespace greenview
