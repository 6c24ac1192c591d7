#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "greenview/gvi.hpp"
#include "greenview/imaging.hpp"

namespace greenview {

/// Mean Earth radius used by every distance computation, in meters.
inline constexpr double kEarthRadiusM = 6'371'008.8;

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoLocation& a, const GeoLocation& b);

struct StreetSegment {
  std::string id;
  std::vector<GeoLocation> vertices;  // WGS84, at least two
};

class StreetNetwork {
 public:
  StreetNetwork() = default;

  /// Throws InvalidArgument for segments with fewer than two vertices or
  /// coordinates outside [-90,90] x [-180,180].
  explicit StreetNetwork(std::vector<StreetSegment> segments);

  const std::vector<StreetSegment>& segments() const noexcept { return segments_; }
  bool empty() const noexcept { return segments_.empty(); }

 private:
  std::vector<StreetSegment> segments_;
};

/// Accepts a FeatureCollection, Feature or bare geometry. LineString and
/// MultiLineString geometries become segments; everything else is ignored.
/// Segment ids come from properties.id, else the feature index; parts of a
/// MultiLineString get a ":<part>" suffix.
StreetNetwork parse_street_network(const nlohmann::json& geojson);
StreetNetwork load_street_network(const std::filesystem::path& path);

double polyline_length_m(const StreetSegment& segment);

/// Location at `arc_m` meters along the polyline (clamped to its ends).
/// Within an edge, latitude and longitude are interpolated linearly in the
/// fraction of that edge's haversine length.
GeoLocation point_along(const StreetSegment& segment, double arc_m);

struct SamplePoint {
  std::string point_id;
  GeoLocation location;
  std::string segment_id;
  std::vector<double> requested_headings;

  friend bool operator==(const SamplePoint&, const SamplePoint&) = default;
};

struct SamplingOptions {
  std::vector<double> headings{0.0, 60.0, 120.0, 180.0, 240.0, 300.0};
  /// Uniform along-street jitter of up to +/- jitter_m meters. Off by default.
  double jitter_m = 0.0;
};

/// floor((length - interval/2) / interval) + 1 when length >= interval/2,
/// else 0.
std::size_t expected_point_count(double length_m, double interval_m);

/// Places points every interval_m meters of arc length, the first one
/// interval_m/2 from each segment start. Point ids are "<segment>-<k>".
std::vector<SamplePoint> sample_points(const StreetNetwork& network, double interval_m,
                                       std::uint64_t seed, const SamplingOptions& options = {});

/// k points drawn uniformly without replacement, returned in input order.
std::vector<SamplePoint> random_subsample(std::span<const SamplePoint> points, std::size_t k,
                                          std::uint64_t seed);

void save_points_csv(std::span<const SamplePoint> points, const std::filesystem::path& path);
std::vector<SamplePoint> load_points_csv(const std::filesystem::path& path);

struct PointResult {
  SamplePoint point;
  GviMeasurement gvi;
};

/// FeatureCollection of Point features with properties
/// {point_id, gvi, n_images, source}; coordinates are [lon, lat].
nlohmann::json to_geojson(std::span<const PointResult> results);
void export_geojson(std::span<const PointResult> results, const std::filesystem::path& path);

struct GeoJsonRecord {
  std::string point_id;
  GeoLocation location;
  double gvi = 0.0;
  std::size_t n_images = 0;
  std::string source;

  friend bool operator==(const GeoJsonRecord&, const GeoJsonRecord&) = default;
};

std::vector<GeoJsonRecord> import_geojson_results(const std::filesystem::path& path);

}  // namespace greenview
