#include "greenview/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <mutex>
#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "greenview/error.hpp"
#include "greenview/onnx.hpp"
#include "greenview/worker_pool.hpp"

namespace greenview {

std::string_view to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::Baseline: return "baseline";
    case EstimatorKind::MaskBackend: return "mask_backend";
    case EstimatorKind::DirectEstimate: return "direct_estimate";
  }
  return "unknown";
}

namespace {

Source source_of(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Baseline: return Source::Baseline;
    case EstimatorKind::MaskBackend: return Source::MaskBackend;
    case EstimatorKind::DirectEstimate: return Source::DirectEstimate;
  }
  return Source::MaskBackend;
}

double clamp_gvi(double value) {
  if (std::isnan(value)) throw Error(ErrorCode::BackendFailure, "backend returned NaN");
  return std::clamp(value, 0.0, 100.0);
}

class BaselineEstimator final : public Estimator {
 public:
  explicit BaselineEstimator(const BaselineConfig& config) : config_(config) { config_.validate(); }

  EstimatorKind kind() const noexcept override { return EstimatorKind::Baseline; }
  std::string name() const override { return "threshold and cluster"; }
  BackendOutput run(const RasterImage& image) const override { return segment(image, config_); }

 private:
  BaselineConfig config_;
};

class MaskDirectoryEstimator final : public Estimator {
 public:
  explicit MaskDirectoryEstimator(std::filesystem::path dir) : dir_(std::move(dir)) {}

  EstimatorKind kind() const noexcept override { return EstimatorKind::MaskBackend; }
  std::string name() const override { return "masks:" + dir_.filename().string(); }

  BackendOutput run(const RasterImage& image) const override {
    const auto path = dir_ / (image.id() + ".png");
    if (!std::filesystem::exists(path))
      throw Error(ErrorCode::MissingMaskFile, "no mask at " + path.string());
    auto mask = mask_from_png(path);
    if (mask.width() != image.width() || mask.height() != image.height())
      throw Error(ErrorCode::ShapeMismatch,
                  path.string() + " is " + std::to_string(mask.width()) + "x" +
                      std::to_string(mask.height()) + ", image is " +
                      std::to_string(image.width()) + "x" + std::to_string(image.height()));
    return mask;
  }

 private:
  std::filesystem::path dir_;
};

class ConstantEstimator final : public Estimator {
 public:
  explicit ConstantEstimator(double gvi) : gvi_(gvi) {}

  EstimatorKind kind() const noexcept override { return EstimatorKind::DirectEstimate; }
  std::string name() const override { return "constant"; }
  BackendOutput run(const RasterImage&) const override { return gvi_; }

 private:
  double gvi_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BackendFailure, "cannot read model " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::array<float, 3> channel_triple(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::IncompatibleModel, std::string("'") + key + "' must hold 3 numbers");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

void apply_normalization_json(const nlohmann::json& j, Normalization& norm) {
  if (j.contains("mean")) norm.mean = channel_triple(j.at("mean"), "mean");
  if (j.contains("std")) norm.std = channel_triple(j.at("std"), "std");
}

Normalization load_normalization(const std::filesystem::path& model_path,
                                 const OnnxSignature& sig) {
  Normalization norm;
  try {
    for (const char* key : {"mean", "std"}) {
      const auto it = sig.metadata.find(key);
      if (it != sig.metadata.end())
        apply_normalization_json({{key, nlohmann::json::parse(it->second)}}, norm);
    }
    auto sidecar = model_path;
    sidecar.replace_extension(".json");
    if (std::filesystem::exists(sidecar)) {
      std::ifstream in(sidecar);
      apply_normalization_json(nlohmann::json::parse(in), norm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IncompatibleModel, std::string("bad normalization constants: ") + e.what());
  }
  for (float s : norm.std)
    if (!(s > 0.0f)) throw Error(ErrorCode::IncompatibleModel, "std constants must be positive");
  return norm;
}

class OnnxEstimator final : public Estimator {
 public:
  OnnxEstimator(const std::filesystem::path& path, ModelKind kind)
      : path_(path), model_kind_(kind), bytes_(read_bytes(path)) {
    const auto sig = read_onnx_signature(bytes_);
    const auto& dims = sig.input_dims;
    if (dims.size() != 4 || (dims[1] != 3 && dims[1] != -1))
      throw Error(ErrorCode::IncompatibleModel,
                  path.string() + ": expected an N x 3 x H x W input");
    input_height_ = dims[2] > 0 ? static_cast<int>(dims[2]) : 0;
    input_width_ = dims[3] > 0 ? static_cast<int>(dims[3]) : 0;
    normalization_ = load_normalization(path, sig);

    // Probe once so a wrong output signature fails at load, not mid-batch.
    const int probe_h = input_height_ > 0 ? input_height_ : 64;
    const int probe_w = input_width_ > 0 ? input_width_ : 64;
    const auto probe = RasterImage::filled("probe", static_cast<std::size_t>(probe_w),
                                           static_cast<std::size_t>(probe_h), Rgb{});
    try {
      run(probe);
    } catch (const Error& e) {
      throw Error(ErrorCode::IncompatibleModel, path.string() + ": " + e.what());
    }
  }

  EstimatorKind kind() const noexcept override {
    return model_kind_ == ModelKind::Segmentation ? EstimatorKind::MaskBackend
                                                  : EstimatorKind::DirectEstimate;
  }
  std::string name() const override { return path_.stem().string(); }

  BackendOutput run(const RasterImage& image) const override {
    const cv::Mat blob = preprocess(image);
    cv::Mat output;
    {
      auto net = acquire();
      try {
        net.net.setInput(blob);
        output = net.net.forward().clone();
      } catch (const cv::Exception& e) {
        release(std::move(net));
        throw Error(ErrorCode::BackendFailure, std::string("inference failed: ") + e.what());
      }
      release(std::move(net));
    }
    if (model_kind_ == ModelKind::Regression) {
      if (output.total() != 1)
        throw Error(ErrorCode::BackendFailure, "regression head must emit one value, got " +
                                                   std::to_string(output.total()));
      return clamp_gvi(static_cast<double>(output.ptr<float>()[0]));
    }
    return postprocess_mask(output, image);
  }

 private:
  struct Lease {
    cv::dnn::Net net;
  };

  // cv::dnn::Net::forward mutates the net, so concurrent callers each take
  // their own instance from a free list.
  Lease acquire() const {
    {
      std::lock_guard lock(mutex_);
      if (!free_.empty()) {
        Lease lease{std::move(free_.back())};
        free_.pop_back();
        return lease;
      }
    }
    try {
      auto net = cv::dnn::readNetFromONNX(reinterpret_cast<const char*>(bytes_.data()),
                                          bytes_.size());
      net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
      net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
      return Lease{std::move(net)};
    } catch (const cv::Exception& e) {
      throw Error(ErrorCode::BackendFailure,
                  "cannot load " + path_.string() + ": " + std::string(e.what()));
    }
  }

  void release(Lease lease) const {
    std::lock_guard lock(mutex_);
    free_.push_back(std::move(lease.net));
  }

  cv::Mat preprocess(const RasterImage& image) const {
    const int w = static_cast<int>(image.width());
    const int h = static_cast<int>(image.height());
    const cv::Mat rgb(h, w, CV_8UC3, const_cast<std::uint8_t*>(image.pixels().data()));
    const int target_w = input_width_ > 0 ? input_width_ : w;
    const int target_h = input_height_ > 0 ? input_height_ : h;
    cv::Mat sized = rgb;
    if (target_w != w || target_h != h)
      cv::resize(rgb, sized, cv::Size(target_w, target_h), 0, 0, cv::INTER_LINEAR);

    const int shape[] = {1, 3, target_h, target_w};
    cv::Mat blob(4, shape, CV_32F);
    auto* out = blob.ptr<float>();
    const std::size_t plane = static_cast<std::size_t>(target_h) * target_w;
    for (int y = 0; y < target_h; ++y) {
      const auto* row = sized.ptr<std::uint8_t>(y);
      for (int x = 0; x < target_w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * target_w + x;
        for (int c = 0; c < 3; ++c) {
          const float v = static_cast<float>(row[3 * x + c]) / 255.0f;
          out[c * plane + i] = (v - normalization_.mean[c]) / normalization_.std[c];
        }
      }
    }
    return blob;
  }

  static VegetationMask postprocess_mask(const cv::Mat& output, const RasterImage& image) {
    if (output.dims != 4 || output.size[0] != 1 || (output.size[1] != 1 && output.size[1] != 2))
      throw Error(ErrorCode::BackendFailure,
                  "segmentation head must emit 1 x 2 x h x w logits or 1 x 1 x h x w probabilities");
    const int channels = output.size[1];
    const int oh = output.size[2];
    const int ow = output.size[3];
    if (oh <= 0 || ow <= 0) throw Error(ErrorCode::ShapeMismatch, "empty segmentation output");
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    const auto* scores = output.ptr<float>();
    cv::Mat small(oh, ow, CV_8UC1);
    auto* bits = small.ptr<std::uint8_t>();
    for (std::size_t i = 0; i < plane; ++i) {
      bits[i] = channels == 2 ? (scores[plane + i] > scores[i] ? 1 : 0)
                              : (scores[i] >= 0.5f ? 1 : 0);
    }
    const int w = static_cast<int>(image.width());
    const int h = static_cast<int>(image.height());
    cv::Mat full = small;
    if (ow != w || oh != h) cv::resize(small, full, cv::Size(w, h), 0, 0, cv::INTER_NEAREST);
    if (full.rows != h || full.cols != w)
      throw Error(ErrorCode::ShapeMismatch, "mask could not be mapped back to the image size");
    std::vector<std::uint8_t> data(full.datastart, full.dataend);
    return VegetationMask(image.width(), image.height(), std::move(data));
  }

  std::filesystem::path path_;
  ModelKind model_kind_;
  std::vector<std::uint8_t> bytes_;
  int input_height_ = 0;
  int input_width_ = 0;
  Normalization normalization_;
  mutable std::mutex mutex_;
  mutable std::vector<cv::dnn::Net> free_;
};

}  // namespace

EstimateResult estimate(const Estimator& estimator, const RasterImage& image) {
  const auto start = std::chrono::steady_clock::now();
  BackendOutput output = estimator.run(image);
  const std::chrono::duration<double> latency = std::chrono::steady_clock::now() - start;

  const Source source = source_of(estimator.kind());
  if (estimator.produces_mask()) {
    auto* mask = std::get_if<VegetationMask>(&output);
    if (mask == nullptr)
      throw Error(ErrorCode::BackendFailure, estimator.name() + " returned no mask");
    if (mask->width() != image.width() || mask->height() != image.height())
      throw Error(ErrorCode::ShapeMismatch, estimator.name() + " returned a mask of the wrong size");
    auto gvi = gvi_of_mask(*mask, source, image.id());
    return EstimateResult{image.id(), std::move(gvi), std::move(*mask), latency.count()};
  }
  const auto* value = std::get_if<double>(&output);
  if (value == nullptr)
    throw Error(ErrorCode::BackendFailure, estimator.name() + " returned no GVI value");
  return EstimateResult{image.id(),
                        GviMeasurement(image.id(), clamp_gvi(*value), Scope::Image, 1, source),
                        std::nullopt, latency.count()};
}

std::shared_ptr<const Estimator> open_baseline_backend(const BaselineConfig& config) {
  return std::make_shared<BaselineEstimator>(config);
}

std::shared_ptr<const Estimator> open_mask_backend(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::UnreadableFile, "mask directory " + dir.string() + " does not exist");
  return std::make_shared<MaskDirectoryEstimator>(dir);
}

std::shared_ptr<const Estimator> open_constant_backend(double gvi) {
  return std::make_shared<ConstantEstimator>(gvi);
}

std::shared_ptr<const Estimator> open_model_backend(const std::filesystem::path& model_path,
                                                    ModelKind kind) {
  return std::make_shared<OnnxEstimator>(model_path, kind);
}

RasterImage load_entry_image(const SampleManifest& manifest, const ManifestEntry& entry) {
  ImageMetadata meta;
  meta.city = entry.city;
  meta.location = entry.location;
  meta.pose = entry.pose;
  return decode_image(manifest.resolve(entry.image_path)).with_id(entry.id).with_metadata(meta);
}

std::vector<EstimateResult> estimate_manifest(const Estimator& estimator,
                                              const SampleManifest& manifest,
                                              const BatchOptions& options) {
  const auto& entries = manifest.entries();
  std::mutex callback_mutex;
  const std::function<EstimateResult(std::size_t)> task = [&](std::size_t i) {
    auto result = estimate(estimator, load_entry_image(manifest, entries[i]));
    if (options.on_result) {
      std::lock_guard lock(callback_mutex);
      options.on_result(entries[i], result);
    }
    return result;
  };
  auto results = parallel_map<EstimateResult>(entries.size(), options.workers, task, options.stop);
  std::sort(results.begin(), results.end(),
            [](const EstimateResult& a, const EstimateResult& b) { return a.id < b.id; });
  return results;
}

}  // namespace greenview
