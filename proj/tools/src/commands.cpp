#include "greenview/cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "greenview/csv.hpp"
#include "greenview/error.hpp"
#include "greenview/gvi.hpp"
#include "greenview/report.hpp"
#include "greenview/worker_pool.hpp"

namespace greenview::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> log() {
  auto l = spdlog::get("cli");
  return l ? l : spdlog::default_logger();
}

/// Output file that only appears under its final name once committed.
class StagedFile {
 public:
  explicit StagedFile(fs::path path) : path_(std::move(path)), staging_(path_) {
    staging_ += ".partial";
    std::error_code ec;
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path(), ec);
    out_.open(staging_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::IoError, "cannot write " + staging_.string());
  }

  ~StagedFile() {
    if (committed_) return;
    out_.close();
    std::error_code ec;
    fs::remove(staging_, ec);
  }

  StagedFile(const StagedFile&) = delete;
  StagedFile& operator=(const StagedFile&) = delete;

  std::ostream& stream() { return out_; }

  void commit() {
    out_.close();
    if (!out_) throw Error(ErrorCode::IoError, "write failed for " + staging_.string());
    fs::rename(staging_, path_);
    committed_ = true;
  }

 private:
  fs::path path_;
  fs::path staging_;
  std::ofstream out_;
  bool committed_ = false;
};

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

std::string describe(const BackendSpec& spec) {
  switch (spec.type) {
    case BackendType::Baseline: return "baseline";
    case BackendType::MaskDir: return "masks:" + spec.mask_dir.string();
    case BackendType::Model:
      return std::string(spec.model_kind == ModelKind::Segmentation ? "segmentation" : "regression") +
             ":" + spec.model.string();
  }
  return "unknown";
}

}  // namespace

void PipelineConfig::validate() const {
  baseline.validate();
  if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  if (!(quantile_lo >= 0.0 && quantile_hi <= 1.0 && quantile_lo <= quantile_hi))
    throw Error(ErrorCode::InvalidQuantile, "quantiles must satisfy 0 <= lo <= hi <= 1");
}

std::shared_ptr<const Estimator> open_backend(const PipelineConfig& config) {
  config.validate();
  switch (config.backend.type) {
    case BackendType::Baseline: return open_baseline_backend(config.baseline);
    case BackendType::MaskDir: return open_mask_backend(config.backend.mask_dir);
    case BackendType::Model: return open_model_backend(config.backend.model, config.backend.model_kind);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown backend");
}

void cmd_segment(const SampleManifest& manifest, const PipelineConfig& config,
                 const fs::path& out_dir, std::stop_token stop) {
  const auto estimator = open_backend(config);
  if (!estimator->produces_mask())
    throw Error(ErrorCode::InvalidArgument, "backend " + describe(config.backend) +
                                                " estimates GVI directly and produces no masks");
  fs::create_directories(out_dir);

  const auto& entries = manifest.entries();
  std::map<std::string, std::pair<std::size_t, std::size_t>> city_progress;  // done, total
  for (const auto& e : entries) ++city_progress[e.city].second;
  std::mutex progress_mutex;
  std::vector<fs::path> written;

  const std::function<int(std::size_t)> task = [&](std::size_t i) {
    const auto& entry = entries[i];
    auto result = estimate(*estimator, load_entry_image(manifest, entry));
    const auto path = out_dir / (entry.id + ".png");
    mask_to_png(*result.mask, path);
    std::lock_guard lock(progress_mutex);
    written.push_back(path);
    auto& [done, total] = city_progress[entry.city];
    ++done;
    if (done == total || done % 100 == 0)
      log()->info("segment {}: {}/{}", entry.city.empty() ? "(no city)" : entry.city, done, total);
    return 0;
  };
  try {
    parallel_map<int>(entries.size(), config.workers, task, stop);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Cancelled) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      log()->warn("segment cancelled, removed {} partial masks", written.size());
    }
    throw;
  }
}

void cmd_gvi(const SampleManifest& manifest, const PipelineConfig& config, const fs::path& out_csv,
             bool pool_pixels, std::stop_token stop) {
  const auto estimator = open_backend(config);
  const auto& entries = manifest.entries();
  const std::function<GviMeasurement(std::size_t)> task = [&](std::size_t i) {
    return estimate(*estimator, load_entry_image(manifest, entries[i])).gvi;
  };
  const auto measured = parallel_map<GviMeasurement>(entries.size(), config.workers, task, stop);

  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return entries[a].id < entries[b].id; });

  const auto reduce = [&](std::span<const GviMeasurement> items, Scope scope, std::string id) {
    return pool_pixels ? aggregate_pooled(items, scope, std::move(id))
                       : aggregate(items, scope, std::move(id));
  };

  StagedFile images(out_csv);
  images.stream() << "id,point_id,city,gvi,source\n";
  std::map<std::string, std::vector<GviMeasurement>> by_point;
  std::map<std::string, std::string> point_city;
  for (auto i : order) {
    const auto& e = entries[i];
    const auto& m = measured[i];
    const std::string point = e.point_id.value_or(e.id);
    csv::write_record(images.stream(), {e.id, point, e.city, csv::format_double(m.value()),
                                        std::string(to_string(m.source()))});
    by_point[point].push_back(m);
    point_city.emplace(point, e.city);  // first entry in id order wins
  }

  StagedFile points(sibling(out_csv, "_points.csv"));
  points.stream() << "point_id,city,gvi,n_images,source\n";
  std::map<std::string, std::vector<GviMeasurement>> by_city;
  for (const auto& [point, items] : by_point) {
    const auto m = reduce(items, Scope::Point, point);
    csv::write_record(points.stream(),
                      {point, point_city[point], csv::format_double(m.value()),
                       std::to_string(m.n_images()), std::string(to_string(m.source()))});
    by_city[point_city[point]].push_back(m);
  }

  StagedFile cities(sibling(out_csv, "_cities.csv"));
  cities.stream() << "city,gvi,n_images,n_points,source\n";
  for (const auto& [city, items] : by_city) {
    const auto m = reduce(items, Scope::City, city);
    csv::write_record(cities.stream(),
                      {city, csv::format_double(m.value()), std::to_string(m.n_images()),
                       std::to_string(items.size()), std::string(to_string(m.source()))});
  }
  images.commit();
  points.commit();
  cities.commit();
  log()->info("gvi: {} images, {} points, {} cities", entries.size(), by_point.size(),
              by_city.size());
}

EvaluationReport cmd_evaluate(const SampleManifest& full_manifest, const PipelineConfig& config,
                              const fs::path& out_report, const EvaluateCommandOptions& options,
                              std::stop_token stop) {
  const auto manifest = full_manifest.subset(options.split);
  if (manifest.empty()) throw Error(ErrorCode::EmptyInput, "no manifest entries to evaluate");
  const auto& entries = manifest.entries();
  for (const auto& e : entries)
    if (!e.true_gvi)
      throw Error(ErrorCode::InvalidArgument, "entry '" + e.id + "' has no true_gvi");

  const auto estimator = open_backend(config);
  const bool with_masks =
      estimator->produces_mask() &&
      std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.label_mask_path; });

  struct Scored {
    PairedSample sample;
    double latency_s;
  };
  const std::function<Scored(std::size_t)> task = [&](std::size_t i) {
    const auto& e = entries[i];
    auto result = estimate(*estimator, load_entry_image(manifest, e));
    PairedSample s;
    s.id = e.id;
    s.predicted_gvi = result.gvi.value();
    s.true_gvi = *e.true_gvi;
    if (with_masks) {
      s.predicted_mask = std::move(result.mask);
      s.true_mask = mask_from_png(manifest.resolve(*e.label_mask_path));
    }
    return Scored{std::move(s), result.latency_s};
  };
  auto scored = parallel_map<Scored>(entries.size(), config.workers, task, stop);

  std::vector<PairedSample> samples;
  samples.reserve(scored.size());
  double total_latency = 0.0;
  for (auto& s : scored) {
    total_latency += s.latency_s;
    samples.push_back(std::move(s.sample));
  }

  EvaluateOptions eval;
  eval.quantile_lo = config.quantile_lo;
  eval.quantile_hi = config.quantile_hi;
  eval.pooled_iou = options.pooled_iou;
  eval.split = options.split ? std::string(to_string(*options.split)) : "all";
  if (options.timing)
    eval.running_time_s_per_10k = total_latency / static_cast<double>(samples.size()) * 10000.0;
  const auto report = evaluate(samples, eval);

  const std::string model = options.model_name.empty() ? estimator->name() : options.model_name;
  auto json = to_json(report);
  json["model"] = model;
  json["backend"] = std::string(to_string(estimator->kind()));

  StagedFile json_out(out_report);
  json_out.stream() << json.dump(2) << '\n';
  auto table_path = out_report;
  table_path.replace_extension(".txt");
  StagedFile table_out(table_path);
  const TableRow row{model, report};
  table_out.stream() << render_table(std::span<const TableRow>(&row, 1));
  json_out.commit();
  table_out.commit();
  log()->info("evaluate: n={} mae={} split={}", report.n, format_metric(report.mae), report.split);
  return report;
}

nlohmann::json BenchmarkReport::to_json() const {
  return {
      {"backend", backend},
      {"images", images},
      {"workers", workers},
      {"run_seconds", run_seconds},
      {"median_seconds", median_seconds},
      {"images_per_second", images_per_second},
      {"seconds_per_10k_images", seconds_per_10k_images},
      {"hours_per_1m_images", hours_per_1m_images},
  };
}

std::string BenchmarkReport::to_text() const {
  std::ostringstream out;
  out << "backend                 " << backend << '\n'
      << "images                  " << images << '\n'
      << "workers                 " << workers << '\n'
      << "runs                    " << run_seconds.size() << '\n'
      << "median wall time (s)    " << median_seconds << '\n'
      << "images / second         " << images_per_second << '\n'
      << "seconds / 10,000 images " << seconds_per_10k_images << '\n'
      << "hours / 1,000,000 images " << hours_per_1m_images << '\n'
      << '\n'
      << "Published reference, seconds per 10,000 images on a desktop GPU machine:\n"
      << "  threshold and cluster 3665, DCNN semantic segmentation 2064, DCNN end-to-end 38.9\n";
  return out.str();
}

BenchmarkReport cmd_benchmark(const SampleManifest& manifest, const PipelineConfig& config,
                              std::size_t repeats, std::stop_token stop) {
  if (manifest.empty()) throw Error(ErrorCode::EmptyInput, "benchmark manifest is empty");
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  const auto estimator = open_backend(config);
  const auto& entries = manifest.entries();

  BenchmarkReport report;
  report.backend = describe(config.backend);
  report.images = entries.size();
  report.workers = config.workers;
  const std::function<double(std::size_t)> task = [&](std::size_t i) {
    return estimate(*estimator, load_entry_image(manifest, entries[i])).gvi.value();
  };
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    parallel_map<double>(entries.size(), config.workers, task, stop);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    report.run_seconds.push_back(elapsed.count());
    log()->info("benchmark run {}/{}: {:.3f} s", r + 1, repeats, elapsed.count());
  }
  auto sorted = report.run_seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  report.median_seconds =
      sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  // Guard against a clock too coarse to register a tiny manifest.
  const double seconds = std::max(report.median_seconds, 1e-9);
  report.images_per_second = static_cast<double>(report.images) / seconds;
  report.seconds_per_10k_images = 10'000.0 / report.images_per_second;
  report.hours_per_1m_images = 1'000'000.0 / report.images_per_second / 3600.0;
  return report;
}

}  // namespace greenview::cli
