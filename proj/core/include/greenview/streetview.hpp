#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "greenview/geo.hpp"
#include "greenview/imaging.hpp"

namespace greenview {

inline constexpr const char* kApiKeyEnvironmentVariable = "GREENVIEW_API_KEY";

struct ImageryClientConfig {
  /// Street View-compatible image endpoint, e.g. https://host/maps/api/streetview
  std::string endpoint;
  std::string api_key;
  std::filesystem::path cache_dir;
  double requests_per_second = 10.0;
  std::string size = "640x640";
  double pitch = 0.0;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::seconds timeout{30};

  /// Value of GREENVIEW_API_KEY, or empty.
  static std::string api_key_from_environment();
};

/// Token bucket shared by every request of one client.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second, double burst = 1.0);

  /// Blocks until a token is available.
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

/// Fetches street-level imagery for sample points with an on-disk cache
/// keyed by (point_id, heading). Headings answered 404 leave a .missing
/// marker so they are not asked for again. Cache hits never touch the network.
/// Thread-safe.
class StreetViewClient {
 public:
  explicit StreetViewClient(ImageryClientConfig config);

  /// One image per available heading (an empty span means the point's
  /// requested headings), stamped with location and pose. Headings the
  /// service has no imagery for are skipped; NoImageryAtPoint if none
  /// remain. QuotaExceeded on HTTP 403/429, TransportError once retries of
  /// 5xx or connection failures are exhausted.
  std::vector<RasterImage> fetch(const SamplePoint& point, std::span<const double> headings = {});

  std::filesystem::path cache_path(const std::string& point_id, double heading) const;

  std::size_t network_requests() const noexcept { return network_requests_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

  const ImageryClientConfig& config() const noexcept { return config_; }

 private:
  /// Raw bytes of one heading, or empty when the service has no imagery.
  std::vector<std::uint8_t> download(const SamplePoint& point, double heading);

  ImageryClientConfig config_;
  std::string base_url_;
  std::string path_;
  RateLimiter limiter_;
  std::atomic<std::size_t> network_requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

struct FetchedPoint {
  SamplePoint point;
  std::vector<RasterImage> images;
};

/// Fetches many points on `workers` lanes; points without imagery are
/// dropped. Output follows input order.
std::vector<FetchedPoint> fetch_points(StreetViewClient& client, std::span<const SamplePoint> points,
                                       std::size_t workers, std::stop_token stop = {});

}  // namespace greenview
