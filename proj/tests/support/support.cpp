#include "support.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "greenview/baseline.hpp"
#include "greenview/error.hpp"
#include "greenview/gvi.hpp"

namespace greenview::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  for (;;) {
    auto candidate = fs::temp_directory_path() /
                     ("greenview-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    if (fs::create_directories(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path fixture_dir() { return GREENVIEW_FIXTURE_DIR; }

VegetationMask random_mask(SeededRng& rng, std::size_t width, std::size_t height, double density) {
  std::vector<std::uint8_t> bits(width * height);
  for (auto& b : bits) b = rng.unit() < density ? 1 : 0;
  return VegetationMask(width, height, std::move(bits));
}

RasterImage random_scene(SeededRng& rng, std::size_t width, std::size_t height, std::string id) {
  std::vector<std::uint8_t> px(width * height * 3);
  for (std::size_t i = 0; i < width * height; ++i) {
    // Mostly grayish background; a few greenish specks sneak through.
    const auto base = static_cast<std::uint8_t>(60 + rng.below(140));
    const bool greenish = rng.unit() < 0.03;
    px[i * 3] = base;
    px[i * 3 + 1] = greenish ? static_cast<std::uint8_t>(std::min(255, base + 40)) : base;
    px[i * 3 + 2] = static_cast<std::uint8_t>(base - std::min<int>(base, static_cast<int>(rng.below(8))));
  }
  const auto rects = 1 + rng.below(4);
  for (std::uint64_t r = 0; r < rects; ++r) {
    const auto w = 1 + rng.below(width / 2);
    const auto h = 1 + rng.below(height / 2);
    const auto x0 = rng.below(width - w + 1);
    const auto y0 = rng.below(height - h + 1);
    const auto g = static_cast<std::uint8_t>(120 + rng.below(136));
    for (auto y = y0; y < y0 + h; ++y)
      for (auto x = x0; x < x0 + w; ++x) {
        const std::size_t i = (y * width + x) * 3;
        px[i] = static_cast<std::uint8_t>(rng.below(g / 2));
        px[i + 1] = g;
        px[i + 2] = static_cast<std::uint8_t>(rng.below(g / 2));
      }
  }
  return RasterImage(std::move(id), width, height, std::move(px));
}

RasterImage random_pixels(SeededRng& rng, std::size_t width, std::size_t height) {
  std::vector<std::uint8_t> px(width * height * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(256));
  return RasterImage("noise", width, height, std::move(px));
}

RasterImage speck_fixture() {
  constexpr std::size_t n = 100;
  std::vector<std::uint8_t> px(n * n * 3, 128);
  auto paint = [&](std::size_t x, std::size_t y) {
    const std::size_t i = (y * n + x) * 3;
    px[i] = kGreen.r;
    px[i + 1] = kGreen.g;
    px[i + 2] = kGreen.b;
  };
  for (std::size_t y = 10; y < 40; ++y)
    for (std::size_t x = 10; x < 40; ++x) paint(x, y);
  for (std::size_t k = 0; k < 20; ++k) paint(50 + (k % 5) * 10, 50 + (k / 5) * 10);
  return RasterImage("specks", n, n, std::move(px));
}

SampleManifest write_synthetic_dataset(const fs::path& dir, const SyntheticDatasetOptions& options) {
  SeededRng rng(options.seed);
  fs::create_directories(dir / "images");
  if (options.with_labels) fs::create_directories(dir / "labels");
  BaselineConfig candidate;
  candidate.min_cluster_area = 0;
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < options.images; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu", i);
    const auto image = random_scene(rng, options.width, options.height, name);
    write_image_png(image, dir / "images" / (std::string(name) + ".png"));

    ManifestEntry e;
    e.id = name;
    e.city = options.cities[i % options.cities.size()];
    e.image_path = "images/" + std::string(name) + ".png";
    const std::size_t point = i / options.images_per_point;
    e.point_id = "pt_" + std::to_string(point);
    e.location = GeoLocation{1.0 + 0.001 * static_cast<double>(point), 103.0};
    e.pose = CameraPose{60.0 * static_cast<double>(i % options.images_per_point), 0.0};

    auto bits = threshold_green(image, candidate);
    std::vector<std::uint8_t> noisy(bits.bits().begin(), bits.bits().end());
    for (auto& b : noisy)
      if (rng.unit() < 0.02) b ^= 1;
    const VegetationMask label(options.width, options.height, std::move(noisy));
    e.true_gvi = gvi_of_mask(label).value();
    if (options.with_labels) {
      e.label_mask_path = "labels/" + std::string(name) + ".png";
      mask_to_png(label, dir / *e.label_mask_path);
    }
    entries.push_back(std::move(e));
  }
  SampleManifest manifest(std::move(entries), dir);
  save_manifest(manifest, dir / "manifest.csv");
  return manifest;
}

SampleManifest synthetic_manifest(std::size_t cities, std::size_t per_city) {
  std::vector<ManifestEntry> entries;
  for (std::size_t c = 0; c < cities; ++c)
    for (std::size_t k = 0; k < per_city; ++k) {
      ManifestEntry e;
      e.id = "c" + std::to_string(c) + "_" + std::to_string(k);
      e.city = "city" + std::to_string(c);
      e.image_path = e.id + ".png";
      entries.push_back(std::move(e));
    }
  return SampleManifest(std::move(entries));
}

StreetNetwork random_network(SeededRng& rng) {
  std::vector<StreetSegment> segments;
  const auto count = 1 + rng.below(6);
  for (std::uint64_t s = 0; s < count; ++s) {
    StreetSegment seg;
    seg.id = "s" + std::to_string(s);
    double lat = -60.0 + 120.0 * rng.unit();
    double lon = -170.0 + 340.0 * rng.unit();
    const auto vertices = 2 + rng.below(4);
    seg.vertices.push_back({lat, lon});
    for (std::uint64_t v = 1; v < vertices; ++v) {
      // Steps of up to ~300 m.
      lat += (rng.unit() - 0.5) * 0.005;
      lon += (rng.unit() - 0.5) * 0.005;
      seg.vertices.push_back({lat, lon});
    }
    segments.push_back(std::move(seg));
  }
  return StreetNetwork(std::move(segments));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

struct StubImageryServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string png;
  mutable std::mutex mutex;
  std::vector<std::string> queries;
};

StubImageryServer::StubImageryServer(Policy policy) : impl_(std::make_unique<Impl>()) {
  {
    TempDir tmp;
    write_image_png(RasterImage::filled("stub", 8, 4, Rgb{20, 200, 30}), tmp / "stub.png");
    impl_->png = read_text(tmp / "stub.png");
  }
  impl_->server.Get("/streetview", [this, policy](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const auto location = req.get_param_value("location");
    const auto comma = location.find(',');
    const double lat = std::stod(location.substr(0, comma));
    const double lon = std::stod(location.substr(comma + 1));
    const double heading = std::stod(req.get_param_value("heading"));
    {
      std::lock_guard lock(impl_->mutex);
      std::string q;
      for (const auto& [k, v] : req.params) q += (q.empty() ? "" : "&") + k + "=" + v;
      impl_->queries.push_back(q);
    }
    const int status = policy ? policy(lat, lon, heading) : 200;
    res.status = status;
    if (status == 200) res.set_content(impl_->png, "image/png");
  });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

StubImageryServer::~StubImageryServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubImageryServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + "/streetview";
}

std::vector<std::string> StubImageryServer::queries() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->queries;
}

}  // namespace greenview::testing
