#include "greenview/cli/app.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "greenview/cli/commands.hpp"
#include "greenview/csv.hpp"
#include "greenview/error.hpp"
#include "greenview/geo.hpp"
#include "greenview/streetview.hpp"

namespace greenview::cli {

namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_interrupt(int) { g_interrupted = 1; }

/// TOML reader where [section] key = v becomes --section-key, except for
/// sections named after a subcommand, which keep CLI11's usual meaning.
class FlatSections : public CLI::ConfigTOML {
 public:
  explicit FlatSections(std::set<std::string> subcommands) : subcommands_(std::move(subcommands)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> out;
    for (auto item : CLI::ConfigTOML::from_config(input)) {
      const bool flatten = !item.parents.empty() && !subcommands_.count(item.parents.front());
      if (flatten) {
        if (item.name == "++" || item.name == "--") continue;
        std::string prefix;
        for (const auto& p : item.parents) prefix += p + "-";
        item.name = prefix + item.name;
        item.parents.clear();
      }
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      out.push_back(std::move(item));
    }
    return out;
  }

 private:
  std::set<std::string> subcommands_;
};

void setup_logging(bool verbose) {
  auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
  for (const char* name : {"cli", "dataset", "geo", "inference"}) {
    if (spdlog::get(name)) continue;
    auto logger = std::make_shared<spdlog::logger>(name, sink);
    spdlog::register_logger(logger);
  }
  spdlog::set_pattern("%l %Y-%m-%dT%H:%M:%S.%e %n %v");
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
}

/// Turns SIGINT into a stop request for the lifetime of one command.
class InterruptWatch {
 public:
  InterruptWatch() {
    g_interrupted = 0;
    previous_ = std::signal(SIGINT, on_interrupt);
    watcher_ = std::jthread([this](std::stop_token self) {
      while (!self.stop_requested()) {
        if (g_interrupted) {
          spdlog::get("cli")->warn("interrupt received, stopping");
          source_.request_stop();
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    });
  }
  ~InterruptWatch() {
    watcher_.request_stop();
    watcher_.join();
    std::signal(SIGINT, previous_);
  }
  InterruptWatch(const InterruptWatch&) = delete;
  InterruptWatch& operator=(const InterruptWatch&) = delete;

  std::stop_token token() const { return source_.get_token(); }

 private:
  std::stop_source source_;
  void (*previous_)(int) = SIG_DFL;
  std::jthread watcher_;
};

std::map<std::string, SamplePoint> points_by_id(const std::vector<SamplePoint>& points) {
  std::map<std::string, SamplePoint> out;
  for (const auto& p : points) out.emplace(p.point_id, p);
  return out;
}

std::vector<PointResult> read_point_results(const fs::path& gvi_csv,
                                            const std::map<std::string, SamplePoint>& where) {
  std::ifstream in(gvi_csv, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, gvi_csv.string());
  auto header = csv::read_record(in);
  if (!header) throw Error(ErrorCode::MissingColumn, gvi_csv.string() + " is empty");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[(*header)[i]] = i;
  for (const char* name : {"point_id", "gvi", "n_images", "source"})
    if (!col.count(name))
      throw Error(ErrorCode::MissingColumn, gvi_csv.string() + " lacks column " + name);

  std::vector<PointResult> results;
  std::size_t row = 1;
  while (auto rec = csv::read_record(in)) {
    ++row;
    if (rec->size() == 1 && rec->front().empty()) continue;
    if (rec->size() != header->size())
      throw Error(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": wrong field count");
    const auto& id = (*rec)[col["point_id"]];
    const auto gvi = csv::parse_double((*rec)[col["gvi"]]);
    const auto n = csv::parse_double((*rec)[col["n_images"]]);
    if (!gvi || !n || *n < 1)
      throw Error(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": bad number");
    const auto it = where.find(id);
    if (it == where.end()) {
      spdlog::get("cli")->warn("no location for point {}, skipped", id);
      continue;
    }
    results.push_back({it->second, GviMeasurement(id, *gvi, Scope::Point, static_cast<std::size_t>(*n),
                                                  parse_source((*rec)[col["source"]]))});
  }
  return results;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Green View Index toolkit: vegetation segmentation, GVI aggregation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);

  PipelineConfig config;
  std::string backend = "baseline";
  std::string model_kind = "segmentation";
  int connectivity = 4;
  bool verbose = false;

  app.set_config("--config", "", "TOML config; [section] key maps to --section-key");
  app.add_option("--workers", config.workers, "Worker lanes")->capture_default_str();
  app.add_option("--seed", config.seed, "Random seed")->capture_default_str();
  app.add_flag("--verbose,-v", verbose, "Debug logging");
  app.add_option("--cache-dir", config.cache_dir, "Imagery cache directory")->capture_default_str();
  app.add_option("--quantile-lo", config.quantile_lo)->capture_default_str();
  app.add_option("--quantile-hi", config.quantile_hi)->capture_default_str();
  app.add_option("--backend", backend, "baseline | masks | model")
      ->check(CLI::IsMember({"baseline", "masks", "model"}))
      ->capture_default_str();
  app.add_option("--mask-dir", config.backend.mask_dir, "Directory of <id>.png masks (masks backend)");
  app.add_option("--model", config.backend.model, "ONNX model file (model backend)");
  app.add_option("--model-kind", model_kind, "segmentation | regression")
      ->check(CLI::IsMember({"segmentation", "regression"}))
      ->capture_default_str();
  app.add_option("--baseline-green-dominance-margin", config.baseline.green_dominance_margin)
      ->capture_default_str();
  app.add_option("--baseline-excess-green-threshold", config.baseline.excess_green_threshold)
      ->capture_default_str();
  app.add_option("--baseline-min-cluster-area", config.baseline.min_cluster_area)
      ->capture_default_str();
  app.add_option("--baseline-connectivity", connectivity)
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();

  fs::path manifest_path;
  fs::path out_path;

  auto* segment = app.add_subcommand("segment", "Write one vegetation mask PNG per manifest entry");
  segment->add_option("--manifest", manifest_path)->required();
  segment->add_option("--out", out_path, "Output mask directory")->required();

  bool pool_pixels = false;
  auto* gvi = app.add_subcommand("gvi", "Per-image GVI plus point and city aggregates");
  gvi->add_option("--manifest", manifest_path)->required();
  gvi->add_option("--out", out_path, "Per-image CSV; _points/_cities CSVs go next to it")->required();
  gvi->add_flag("--pool-pixels", pool_pixels, "Aggregate by pooled pixel counts");

  EvaluateCommandOptions eval_opts;
  std::string split_name = "all";
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a backend against ground truth");
  evaluate_cmd->add_option("--manifest", manifest_path)->required();
  evaluate_cmd->add_option("--out", out_path, "Report JSON; the table goes to .txt")->required();
  evaluate_cmd->add_option("--split", split_name, "train | val | test | all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  evaluate_cmd->add_flag("--pooled-iou", eval_opts.pooled_iou, "Dataset-pooled IoU");
  evaluate_cmd->add_flag("--timing", eval_opts.timing, "Include measured running time");
  evaluate_cmd->add_option("--name", eval_opts.model_name, "Model name in the table");

  CityscapesOptions cs;
  int vegetation_id = 21;
  auto* convert = app.add_subcommand("convert-cityscapes", "Binary masks and a manifest from Cityscapes");
  convert->add_option("--labels", cs.labels_dir, "gtFine split directory")->required();
  convert->add_option("--images", cs.images_dir, "leftImg8bit split directory")->required();
  convert->add_option("--out", cs.out_dir)->required();
  convert->add_option("--vegetation-id", vegetation_id)->check(CLI::Range(0, 255))->capture_default_str();

  SplitSizes sizes;
  bool no_stratify = false;
  auto* split = app.add_subcommand("split", "Assign train/val/test splits");
  split->add_option("--manifest", manifest_path)->required();
  split->add_option("--out", out_path)->required();
  split->add_option("--train", sizes.train)->required();
  split->add_option("--val", sizes.val)->required();
  split->add_option("--test", sizes.test)->required();
  split->add_flag("--no-stratify", no_stratify);

  fs::path network_path;
  double interval_m = 50.0;
  std::vector<double> headings{0, 60, 120, 180, 240, 300};
  double jitter_m = 0.0;
  std::size_t subsample = 0;
  std::string endpoint;
  std::string city;
  fs::path fetch_manifest;
  double rps = 10.0;
  auto* sample = app.add_subcommand("sample-points", "Sample points along a street network");
  sample->add_option("--network", network_path, "GeoJSON LineString network")->required();
  sample->add_option("--out", out_path, "Points CSV")->required();
  sample->add_option("--interval", interval_m, "Meters between points")->capture_default_str();
  sample->add_option("--headings", headings)->delimiter(',')->capture_default_str();
  sample->add_option("--jitter", jitter_m, "Along-street jitter in meters")->capture_default_str();
  sample->add_option("--subsample", subsample, "Keep k random points");
  sample->add_option("--endpoint", endpoint, "Imagery endpoint; fetches images when set");
  sample->add_option("--city", city, "City for fetched manifest rows");
  sample->add_option("--fetch-manifest", fetch_manifest, "Manifest for fetched images");
  sample->add_option("--requests-per-second", rps)->capture_default_str();

  std::size_t repeats = 3;
  fs::path bench_json;
  auto* bench = app.add_subcommand("benchmark", "Throughput of a backend over a manifest");
  bench->add_option("--manifest", manifest_path)->required();
  bench->add_option("--repeats", repeats)->capture_default_str();
  bench->add_option("--json", bench_json, "Also write the report as JSON");

  fs::path gvi_points;
  fs::path points_csv;
  auto* export_cmd = app.add_subcommand("export-geojson", "Point GVI as a GeoJSON FeatureCollection");
  export_cmd->add_option("--gvi", gvi_points, "Points CSV from the gvi command")->required();
  auto* loc_points = export_cmd->add_option("--points", points_csv, "Points CSV with locations");
  auto* loc_manifest = export_cmd->add_option("--manifest", manifest_path, "Manifest with locations");
  loc_points->excludes(loc_manifest);
  export_cmd->add_option("--out", out_path)->required();

  std::set<std::string> names;
  for (const auto* sub : app.get_subcommands({})) names.insert(sub->get_name());
  app.config_formatter(std::make_shared<FlatSections>(names));

  try {
    app.parse(argc, argv);
    if (export_cmd->parsed() && !loc_points->count() && !loc_manifest->count())
      throw CLI::RequiredError("--points or --manifest");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  setup_logging(verbose);
  const auto log = spdlog::get("cli");
  config.baseline.connectivity = connectivity == 8 ? Connectivity::Eight : Connectivity::Four;
  config.backend.type = backend == "masks"   ? BackendType::MaskDir
                        : backend == "model" ? BackendType::Model
                                             : BackendType::Baseline;
  config.backend.model_kind =
      model_kind == "regression" ? ModelKind::Regression : ModelKind::Segmentation;

  InterruptWatch interrupt;
  const auto stop = interrupt.token();
  try {
    config.validate();
    if (segment->parsed()) {
      cmd_segment(load_manifest(manifest_path), config, out_path, stop);
    } else if (gvi->parsed()) {
      cmd_gvi(load_manifest(manifest_path), config, out_path, pool_pixels, stop);
    } else if (evaluate_cmd->parsed()) {
      eval_opts.split = parse_split(split_name);
      const auto report = cmd_evaluate(load_manifest(manifest_path), config, out_path, eval_opts, stop);
      auto table = out_path;
      table.replace_extension(".txt");
      std::ifstream text(table);
      std::cout << text.rdbuf();
      (void)report;
    } else if (convert->parsed()) {
      cs.vegetation_label_id = static_cast<std::uint8_t>(vegetation_id);
      cs.workers = config.workers;
      const auto manifest = convert_cityscapes(cs, stop);
      log->info("converted {} images into {}", manifest.size(), cs.out_dir.string());
    } else if (split->parsed()) {
      const auto out = split_dataset(load_manifest(manifest_path), sizes, config.seed, !no_stratify);
      save_manifest(out, out_path);
    } else if (sample->parsed()) {
      SamplingOptions opts;
      opts.headings = headings;
      opts.jitter_m = jitter_m;
      auto points = sample_points(load_street_network(network_path), interval_m, config.seed, opts);
      if (subsample > 0) points = random_subsample(points, subsample, config.seed);
      save_points_csv(points, out_path);
      log->info("{} sample points written to {}", points.size(), out_path.string());
      if (!endpoint.empty()) {
        if (fetch_manifest.empty())
          throw Error(ErrorCode::InvalidArgument, "--endpoint needs --fetch-manifest");
        ImageryClientConfig client_config;
        client_config.endpoint = endpoint;
        client_config.api_key = ImageryClientConfig::api_key_from_environment();
        client_config.cache_dir = config.cache_dir;
        client_config.requests_per_second = rps;
        StreetViewClient client(client_config);
        const auto fetched = fetch_points(client, points, config.workers, stop);
        std::vector<ManifestEntry> rows;
        const auto base = fs::absolute(fetch_manifest).parent_path();
        for (const auto& fp : fetched) {
          for (const auto& image : fp.images) {
            ManifestEntry e;
            e.id = image.id();
            e.city = city;
            const double heading = image.metadata().pose ? image.metadata().pose->heading : 0.0;
            e.image_path = fs::absolute(client.cache_path(fp.point.point_id, heading))
                               .lexically_relative(base)
                               .generic_string();
            e.location = image.metadata().location;
            e.pose = image.metadata().pose;
            e.point_id = fp.point.point_id;
            rows.push_back(std::move(e));
          }
        }
        save_manifest(SampleManifest(std::move(rows), base), fetch_manifest);
        log->info("fetched {} of {} points ({} requests, {} cache hits)", fetched.size(),
                  points.size(), client.network_requests(), client.cache_hits());
      }
    } else if (bench->parsed()) {
      const auto report = cmd_benchmark(load_manifest(manifest_path), config, repeats, stop);
      std::cout << report.to_text();
      if (!bench_json.empty()) {
        std::ofstream out(bench_json, std::ios::binary | std::ios::trunc);
        out << report.to_json().dump(2) << '\n';
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + bench_json.string());
      }
    } else if (export_cmd->parsed()) {
      std::map<std::string, SamplePoint> where;
      if (loc_points->count()) {
        where = points_by_id(load_points_csv(points_csv));
      } else {
        const auto manifest = load_manifest(manifest_path);
        for (const auto& e : manifest.entries()) {
          if (!e.location) continue;
          const auto id = e.point_id.value_or(e.id);
          where.emplace(id, SamplePoint{id, *e.location, {}, {}});
        }
      }
      const auto results = read_point_results(gvi_points, where);
      export_geojson(results, out_path);
      log->info("{} points exported to {}", results.size(), out_path.string());
    }
  } catch (const Error& e) {
    log->error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return 1;
  }
  return 0;
}

}  // namespace greenview::cli
