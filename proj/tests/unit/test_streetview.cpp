#include <gtest/gtest.h>

#include <cstdlib>

#include "greenview/error.hpp"
#include "greenview/streetview.hpp"
#include "support.hpp"

using namespace greenview;
using greenview::testing::StubImageryServer;
using greenview::testing::TempDir;

namespace {

ImageryClientConfig config_for(const StubImageryServer& server, const TempDir& tmp) {
  ImageryClientConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.api_key = "k3y";
  cfg.cache_dir = tmp / "cache";
  cfg.requests_per_second = 1000.0;
  cfg.backoff_base = std::chrono::milliseconds(5);
  cfg.timeout = std::chrono::seconds(5);
  return cfg;
}

SamplePoint point(std::string id, double lat = 42.35, double lon = -71.06) {
  return SamplePoint{std::move(id), {lat, lon}, "seg", {0, 120, 240}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no greenview::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(StreetView, FetchStampsPoseAndSendsQuery) {
  StubImageryServer server;
  TempDir tmp;
  StreetViewClient client(config_for(server, tmp));
  const auto images = client.fetch(point("p/1"));
  ASSERT_EQ(images.size(), 3u);
  EXPECT_EQ(images[1].id(), "p/1_h120");
  EXPECT_EQ(images[1].width(), 8u);
  ASSERT_TRUE(images[1].metadata().pose);
  EXPECT_EQ(images[1].metadata().pose->heading, 120.0);
  EXPECT_EQ(images[1].metadata().location, (GeoLocation{42.35, -71.06}));
  EXPECT_EQ(server.requests(), 3u);
  const auto q = server.queries().at(0);
  EXPECT_NE(q.find("location=42.35,-71.06"), std::string::npos) << q;
  EXPECT_NE(q.find("heading=0"), std::string::npos) << q;
  EXPECT_NE(q.find("pitch=0"), std::string::npos) << q;
  EXPECT_NE(q.find("size=640x640"), std::string::npos) << q;
  EXPECT_NE(q.find("key=k3y"), std::string::npos) << q;
  // Path separators in ids never escape the cache directory.
  EXPECT_EQ(client.cache_path("p/1", 120).parent_path(), tmp / "cache");
}

TEST(StreetView, SecondRunServedFromCache) {
  StubImageryServer server;
  TempDir tmp;
  {
    StreetViewClient first(config_for(server, tmp));
    first.fetch(point("a"));
    EXPECT_EQ(first.network_requests(), 3u);
  }
  StreetViewClient second(config_for(server, tmp));
  const auto images = second.fetch(point("a"));
  EXPECT_EQ(images.size(), 3u);
  EXPECT_EQ(second.network_requests(), 0u);
  EXPECT_EQ(second.cache_hits(), 3u);
  EXPECT_EQ(server.requests(), 3u);
}

TEST(StreetView, MissingHeadingsSkippedAndRemembered) {
  StubImageryServer server([](double, double, double heading) { return heading == 120 ? 404 : 200; });
  TempDir tmp;
  StreetViewClient client(config_for(server, tmp));
  const auto images = client.fetch(point("a"));
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(images[1].metadata().pose->heading, 240.0);
  StreetViewClient again(config_for(server, tmp));
  EXPECT_EQ(again.fetch(point("a")).size(), 2u);
  EXPECT_EQ(again.network_requests(), 0u);
}

TEST(StreetView, NoImageryAtPoint) {
  StubImageryServer server([](double lat, double, double) { return lat > 50 ? 404 : 200; });
  TempDir tmp;
  StreetViewClient client(config_for(server, tmp));
  EXPECT_EQ(code_of([&] { client.fetch(point("north", 60.0)); }), ErrorCode::NoImageryAtPoint);

  const std::vector<SamplePoint> points{point("x"), point("north", 60.0), point("y")};
  const auto fetched = fetch_points(client, points, 2);
  ASSERT_EQ(fetched.size(), 2u);
  EXPECT_EQ(fetched[0].point.point_id, "x");
  EXPECT_EQ(fetched[1].point.point_id, "y");
}

TEST(StreetView, QuotaErrors) {
  for (int status : {403, 429}) {
    StubImageryServer server([status](double, double, double) { return status; });
    TempDir tmp;
    StreetViewClient client(config_for(server, tmp));
    EXPECT_EQ(code_of([&] { client.fetch(point("a")); }), ErrorCode::QuotaExceeded);
    EXPECT_EQ(server.requests(), 1u);
  }
}

TEST(StreetView, ServerErrorsRetriedThenTransportError) {
  StubImageryServer server([](double, double, double) { return 503; });
  TempDir tmp;
  StreetViewClient client(config_for(server, tmp));
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { client.fetch(point("a")); }), ErrorCode::TransportError);
  EXPECT_EQ(server.requests(), 3u);
  // Backoff of 5 ms then 10 ms.
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(15));
}

TEST(StreetView, TransientFailureRecovers) {
  std::atomic<int> calls{0};
  StubImageryServer server([&](double, double, double) { return calls++ == 0 ? 500 : 200; });
  TempDir tmp;
  StreetViewClient client(config_for(server, tmp));
  EXPECT_EQ(client.fetch(point("a"), std::vector<double>{90}).size(), 1u);
  EXPECT_EQ(client.network_requests(), 2u);
}

TEST(StreetView, OtherClientErrorsAreNotRetried) {
  StubImageryServer server([](double, double, double) { return 400; });
  TempDir tmp;
  StreetViewClient client(config_for(server, tmp));
  EXPECT_EQ(code_of([&] { client.fetch(point("a")); }), ErrorCode::TransportError);
  EXPECT_EQ(server.requests(), 1u);
}

TEST(StreetView, ConnectionRefused) {
  TempDir tmp;
  std::string endpoint;
  {
    StubImageryServer server;
    endpoint = server.endpoint();
  }
  ImageryClientConfig cfg;
  cfg.endpoint = endpoint;
  cfg.cache_dir = tmp / "cache";
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(2);
  StreetViewClient client(cfg);
  EXPECT_EQ(code_of([&] { client.fetch(point("a")); }), ErrorCode::TransportError);
  EXPECT_EQ(client.network_requests(), 3u);
}

TEST(StreetView, ConfigValidation) {
  ImageryClientConfig cfg;
  cfg.endpoint = "not a url";
  EXPECT_EQ(code_of([&] { StreetViewClient c(cfg); }), ErrorCode::InvalidArgument);
  cfg.endpoint = "http://localhost/x";
  cfg.requests_per_second = 0;
  EXPECT_EQ(code_of([&] { StreetViewClient c(cfg); }), ErrorCode::InvalidArgument);
}

TEST(StreetView, ApiKeyFromEnvironment) {
  ::setenv(kApiKeyEnvironmentVariable, "from-env", 1);
  EXPECT_EQ(ImageryClientConfig::api_key_from_environment(), "from-env");
  ::unsetenv(kApiKeyEnvironmentVariable);
  EXPECT_EQ(ImageryClientConfig::api_key_from_environment(), "");
}

TEST(RateLimiter, SpacesRequests) {
  RateLimiter limiter(100.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) limiter.acquire();
  // One token up front, five more at 10 ms each.
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(45));
}
