#include "greenview/streetview.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <thread>

#include "greenview/csv.hpp"
#include "greenview/error.hpp"
#include "greenview/worker_pool.hpp"

namespace greenview {

std::string ImageryClientConfig::api_key_from_environment() {
  const char* key = std::getenv(kApiKeyEnvironmentVariable);
  return key == nullptr ? std::string() : std::string(key);
}

RateLimiter::RateLimiter(double per_second, double burst)
    : rate_(per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(Clock::now()) {
  if (!(per_second > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate limit must be positive");
}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = Clock::now();
    tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    // Holding the lock while sleeping keeps waiters in a single line.
    std::this_thread::sleep_for(wait);
  }
}

namespace {

std::string sanitize(const std::string& text) {
  std::string out = text;
  for (auto& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return out;
}

auto logger() {
  auto l = spdlog::get("geo");
  return l ? l : spdlog::default_logger();
}

}  // namespace

StreetViewClient::StreetViewClient(ImageryClientConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_second) {
  if (config_.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "endpoint must be an absolute http(s) URL");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  base_url_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

std::filesystem::path StreetViewClient::cache_path(const std::string& point_id,
                                                   double heading) const {
  return config_.cache_dir / (sanitize(point_id) + "_h" + csv::format_double(heading) + ".img");
}

std::vector<std::uint8_t> StreetViewClient::download(const SamplePoint& point, double heading) {
  const std::string query =
      "location=" + csv::format_double(point.location.latitude) + "," +
      csv::format_double(point.location.longitude) + "&heading=" + csv::format_double(heading) +
      "&pitch=" + csv::format_double(config_.pitch) + "&size=" + config_.size +
      "&key=" + httplib::detail::encode_query_param(config_.api_key);
  const std::string target = path_ + "?" + query;

  std::string last_failure;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    limiter_.acquire();
    ++network_requests_;
    httplib::Client client(base_url_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    const auto res = client.Get(target);
    if (!res) {
      last_failure = httplib::to_string(res.error());
    } else if (res->status == 200) {
      return {res->body.begin(), res->body.end()};
    } else if (res->status == 404) {
      return {};
    } else if (res->status == 403 || res->status == 429) {
      throw Error(ErrorCode::QuotaExceeded,
                  "HTTP " + std::to_string(res->status) + " for point " + point.point_id);
    } else if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
    } else {
      throw Error(ErrorCode::TransportError,
                  "HTTP " + std::to_string(res->status) + " for point " + point.point_id);
    }
    if (attempt < config_.max_attempts) {
      const auto delay = config_.backoff_base * (1 << (attempt - 1));
      logger()->warn("point {} heading {}: {} (attempt {}/{}), retrying in {} ms", point.point_id,
                     heading, last_failure, attempt, config_.max_attempts, delay.count());
      std::this_thread::sleep_for(delay);
    }
  }
  throw Error(ErrorCode::TransportError, "point " + point.point_id + ": " + last_failure +
                                             " after " + std::to_string(config_.max_attempts) +
                                             " attempts");
}

std::vector<RasterImage> StreetViewClient::fetch(const SamplePoint& point,
                                                 std::span<const double> headings) {
  if (headings.empty()) headings = point.requested_headings;
  std::vector<RasterImage> images;
  for (double heading : headings) {
    const auto cached = cache_path(point.point_id, heading);
    auto missing = cached;
    missing += ".missing";
    std::vector<std::uint8_t> bytes;
    if (std::filesystem::exists(missing)) {
      ++cache_hits_;
      continue;
    }
    if (std::filesystem::exists(cached)) {
      ++cache_hits_;
      std::ifstream in(cached, std::ios::binary);
      bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
      bytes = download(point, heading);
      std::error_code ec;
      std::filesystem::create_directories(cached.parent_path(), ec);
      if (bytes.empty()) {
        std::ofstream(missing, std::ios::trunc);
        continue;
      }
      // Write then rename so a concurrent reader never sees a partial file.
      auto tmp = cached;
      tmp += ".part" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::IoError, "cannot write cache file " + tmp.string());
      }
      std::filesystem::rename(tmp, cached);
    }
    ImageMetadata meta;
    meta.location = point.location;
    meta.pose = CameraPose{heading, config_.pitch};
    auto image = decode_image_bytes(bytes, point.point_id + "_h" + csv::format_double(heading));
    images.push_back(image.with_metadata(std::move(meta)));
  }
  if (images.empty())
    throw Error(ErrorCode::NoImageryAtPoint, "no imagery at point " + point.point_id);
  return images;
}

std::vector<FetchedPoint> fetch_points(StreetViewClient& client, std::span<const SamplePoint> points,
                                       std::size_t workers, std::stop_token stop) {
  const std::function<std::optional<FetchedPoint>(std::size_t)> task = [&](std::size_t i) {
    try {
      return std::optional<FetchedPoint>(FetchedPoint{points[i], client.fetch(points[i])});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoImageryAtPoint) throw;
      logger()->info("skipping {}: {}", points[i].point_id, e.what());
      return std::optional<FetchedPoint>();
    }
  };
  auto fetched = parallel_map<std::optional<FetchedPoint>>(points.size(), workers, task, stop);
  std::vector<FetchedPoint> out;
  for (auto& f : fetched)
    if (f) out.push_back(std::move(*f));
  return out;
}

}  // namespace greenview
