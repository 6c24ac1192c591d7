#include "greenview/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "greenview/csv.hpp"
#include "greenview/error.hpp"
#include "greenview/random.hpp"

namespace greenview {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

bool valid_location(const GeoLocation& p) {
  return p.latitude >= -90.0 && p.latitude <= 90.0 && p.longitude >= -180.0 &&
         p.longitude <= 180.0;
}

}  // namespace

double haversine_m(const GeoLocation& a, const GeoLocation& b) {
  const double phi1 = a.latitude * kDegToRad;
  const double phi2 = b.latitude * kDegToRad;
  const double dphi = (b.latitude - a.latitude) * kDegToRad;
  const double dlambda = (b.longitude - a.longitude) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

StreetNetwork::StreetNetwork(std::vector<StreetSegment> segments) : segments_(std::move(segments)) {
  for (const auto& s : segments_) {
    if (s.vertices.size() < 2)
      throw Error(ErrorCode::InvalidArgument, "segment '" + s.id + "' has fewer than 2 vertices");
    for (const auto& v : s.vertices)
      if (!valid_location(v))
        throw Error(ErrorCode::InvalidArgument, "segment '" + s.id + "' has invalid coordinates");
  }
}

namespace {

std::vector<GeoLocation> parse_line(const nlohmann::json& coords) {
  std::vector<GeoLocation> line;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2)
      throw Error(ErrorCode::InvalidArgument, "GeoJSON position must be [lon, lat]");
    line.push_back({c[1].get<double>(), c[0].get<double>()});
  }
  return line;
}

std::string feature_id(const nlohmann::json& feature, std::size_t index) {
  if (feature.contains("properties") && feature["properties"].is_object()) {
    const auto& props = feature["properties"];
    if (props.contains("id")) {
      const auto& id = props["id"];
      if (id.is_string()) return id.get<std::string>();
      if (id.is_number_integer()) return std::to_string(id.get<long long>());
    }
  }
  if (feature.contains("id") && feature["id"].is_string()) return feature["id"].get<std::string>();
  return "seg" + std::to_string(index);
}

void collect(const nlohmann::json& geometry, const std::string& id,
             std::vector<StreetSegment>& out) {
  if (!geometry.is_object() || !geometry.contains("type")) return;
  const auto type = geometry["type"].get<std::string>();
  if (type == "LineString") {
    out.push_back({id, parse_line(geometry.at("coordinates"))});
  } else if (type == "MultiLineString") {
    std::size_t part = 0;
    for (const auto& line : geometry.at("coordinates"))
      out.push_back({id + ":" + std::to_string(part++), parse_line(line)});
  }
}

}  // namespace

StreetNetwork parse_street_network(const nlohmann::json& geojson) {
  std::vector<StreetSegment> segments;
  try {
    const auto type = geojson.at("type").get<std::string>();
    if (type == "FeatureCollection") {
      std::size_t index = 0;
      for (const auto& f : geojson.at("features")) {
        collect(f.value("geometry", nlohmann::json()), feature_id(f, index), segments);
        ++index;
      }
    } else if (type == "Feature") {
      collect(geojson.at("geometry"), feature_id(geojson, 0), segments);
    } else {
      collect(geojson, "seg0", segments);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed street network: ") + e.what());
  }
  return StreetNetwork(std::move(segments));
}

StreetNetwork load_street_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  return parse_street_network(j);
}

double polyline_length_m(const StreetSegment& segment) {
  double total = 0.0;
  for (std::size_t i = 1; i < segment.vertices.size(); ++i)
    total += haversine_m(segment.vertices[i - 1], segment.vertices[i]);
  return total;
}

GeoLocation point_along(const StreetSegment& segment, double arc_m) {
  const auto& v = segment.vertices;
  if (arc_m <= 0.0) return v.front();
  double walked = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double edge = haversine_m(v[i - 1], v[i]);
    if (edge > 0.0 && walked + edge >= arc_m) {
      const double t = (arc_m - walked) / edge;
      return {v[i - 1].latitude + t * (v[i].latitude - v[i - 1].latitude),
              v[i - 1].longitude + t * (v[i].longitude - v[i - 1].longitude)};
    }
    walked += edge;
  }
  return v.back();
}

std::size_t expected_point_count(double length_m, double interval_m) {
  if (!(interval_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "interval must be positive");
  const double half = interval_m / 2.0;
  if (length_m < half) return 0;
  return static_cast<std::size_t>(std::floor((length_m - half) / interval_m)) + 1;
}

std::vector<SamplePoint> sample_points(const StreetNetwork& network, double interval_m,
                                       std::uint64_t seed, const SamplingOptions& options) {
  if (network.empty()) throw Error(ErrorCode::EmptyNetwork, "street network has no segments");
  if (!(interval_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "interval must be positive");
  for (double h : options.headings)
    if (!(h >= 0.0 && h < 360.0))
      throw Error(ErrorCode::InvalidArgument, "headings must lie in [0, 360)");

  SeededRng rng(seed);
  std::vector<SamplePoint> points;
  for (const auto& segment : network.segments()) {
    const double length = polyline_length_m(segment);
    const std::size_t count = expected_point_count(length, interval_m);
    for (std::size_t k = 0; k < count; ++k) {
      double arc = interval_m / 2.0 + static_cast<double>(k) * interval_m;
      if (options.jitter_m > 0.0)
        arc = std::clamp(arc + (2.0 * rng.unit() - 1.0) * options.jitter_m, 0.0, length);
      points.push_back({segment.id + "-" + std::to_string(k), point_along(segment, arc),
                        segment.id, options.headings});
    }
  }
  return points;
}

std::vector<SamplePoint> random_subsample(std::span<const SamplePoint> points, std::size_t k,
                                          std::uint64_t seed) {
  if (k > points.size())
    throw Error(ErrorCode::NotEnoughPoints, "asked for " + std::to_string(k) + " of " +
                                                std::to_string(points.size()) + " points");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed);
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(points.size() - i));
    std::swap(order[i], order[j]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<SamplePoint> out;
  out.reserve(k);
  for (auto i : order) out.push_back(points[i]);
  return out;
}

void save_points_csv(std::span<const SamplePoint> points, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "point_id,segment_id,lat,lon,headings\n";
  for (const auto& p : points) {
    std::string headings;
    for (std::size_t i = 0; i < p.requested_headings.size(); ++i) {
      if (i > 0) headings += ';';
      headings += csv::format_double(p.requested_headings[i]);
    }
    csv::write_record(out, {p.point_id, p.segment_id, csv::format_double(p.location.latitude),
                            csv::format_double(p.location.longitude), headings});
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<SamplePoint> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  const auto header = csv::read_record(in);
  if (!header || header->size() < 5 || (*header)[0] != "point_id")
    throw Error(ErrorCode::MissingColumn, path.string() + ": expected point_id,segment_id,lat,lon,headings");
  std::vector<SamplePoint> points;
  std::size_t row = 1;
  while (auto rec = csv::read_record(in)) {
    ++row;
    if (rec->size() == 1 && rec->front().empty()) continue;
    const std::string where = path.filename().string() + " row " + std::to_string(row);
    if (rec->size() != 5) throw Error(ErrorCode::MalformedRow, where + ": expected 5 fields");
    const auto lat = csv::parse_double((*rec)[2]);
    const auto lon = csv::parse_double((*rec)[3]);
    if (!lat || !lon) throw Error(ErrorCode::MalformedRow, where + ": bad coordinates");
    SamplePoint p{(*rec)[0], {*lat, *lon}, (*rec)[1], {}};
    std::string_view rest = (*rec)[4];
    while (!rest.empty()) {
      const auto cut = rest.find(';');
      const auto h = csv::parse_double(rest.substr(0, cut));
      if (!h) throw Error(ErrorCode::MalformedRow, where + ": bad heading list");
      p.requested_headings.push_back(*h);
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    points.push_back(std::move(p));
  }
  return points;
}

nlohmann::json to_geojson(std::span<const PointResult> results) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& r : results) {
    features.push_back({
        {"type", "Feature"},
        {"geometry",
         {{"type", "Point"},
          {"coordinates", {r.point.location.longitude, r.point.location.latitude}}}},
        {"properties",
         {{"point_id", r.point.point_id},
          {"gvi", r.gvi.value()},
          {"n_images", r.gvi.n_images()},
          {"source", std::string(to_string(r.gvi.source()))}}},
    });
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

void export_geojson(std::span<const PointResult> results, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_geojson(results).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<GeoJsonRecord> import_geojson_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<GeoJsonRecord> records;
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("type") != "FeatureCollection")
      throw Error(ErrorCode::InvalidArgument, path.string() + " is not a FeatureCollection");
    for (const auto& f : j.at("features")) {
      const auto& coords = f.at("geometry").at("coordinates");
      const auto& props = f.at("properties");
      records.push_back({props.at("point_id").get<std::string>(),
                         {coords.at(1).get<double>(), coords.at(0).get<double>()},
                         props.at("gvi").get<double>(),
                         props.at("n_images").get<std::size_t>(),
                         props.at("source").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  return records;
}

}  // namespace greenview
