#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <variant>
#include <vector>

#include "greenview/baseline.hpp"
#include "greenview/dataset.hpp"
#include "greenview/gvi.hpp"
#include "greenview/imaging.hpp"

namespace greenview {

enum class EstimatorKind { Baseline, MaskBackend, DirectEstimate };
enum class ModelKind { Segmentation, Regression };

std::string_view to_string(EstimatorKind kind) noexcept;

/// Raw backend answer: a mask for segmentation routes, a GVI percentage for
/// end-to-end routes.
using BackendOutput = std::variant<VegetationMask, double>;

/// A GVI estimation backend. Implementations are immutable after
/// construction and run() is safe to call from several threads at once.
class Estimator {
 public:
  virtual ~Estimator() = default;

  virtual EstimatorKind kind() const noexcept = 0;
  virtual std::string name() const = 0;
  virtual BackendOutput run(const RasterImage& image) const = 0;

  bool produces_mask() const noexcept { return kind() != EstimatorKind::DirectEstimate; }
};

struct EstimateResult {
  std::string id;
  GviMeasurement gvi;
  std::optional<VegetationMask> mask;
  double latency_s = 0.0;  // wall clock of the backend call alone
};

/// Runs the backend and derives the measurement. For mask-producing
/// estimators the GVI is always gvi_of_mask(mask).
EstimateResult estimate(const Estimator& estimator, const RasterImage& image);

std::shared_ptr<const Estimator> open_baseline_backend(const BaselineConfig& config);

/// Looks up <dir>/<image id>.png for every image (MissingMaskFile if absent).
std::shared_ptr<const Estimator> open_mask_backend(const std::filesystem::path& dir);

/// Direct-estimate stand-in that always answers `gvi`.
std::shared_ptr<const Estimator> open_constant_backend(double gvi);

struct Normalization {
  std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
  std::array<float, 3> std{1.0f, 1.0f, 1.0f};
};

/// Loads an ONNX model with input N x 3 x H x W (float, RGB scaled to 0-1,
/// then normalized). Normalization comes from metadata_props "mean"/"std"
/// and is overridden by a sidecar JSON file next to the model
/// (model.onnx -> model.json). Segmentation heads must emit N x 2 x h x w
/// logits or N x 1 x h x w probabilities; regression heads a single scalar.
/// The model is probed once at load; any other signature is rejected with
/// IncompatibleModel.
std::shared_ptr<const Estimator> open_model_backend(const std::filesystem::path& model_path,
                                                    ModelKind kind);

/// Decodes the entry's image and stamps it with the entry id and metadata.
RasterImage load_entry_image(const SampleManifest& manifest, const ManifestEntry& entry);

struct BatchOptions {
  std::size_t workers = 1;
  std::stop_token stop;
  /// Called once per finished entry, serialized across workers.
  std::function<void(const ManifestEntry&, const EstimateResult&)> on_result;
};

/// Estimates every manifest entry on `workers` lanes. Results come back
/// sorted by id regardless of the lane count.
std::vector<EstimateResult> estimate_manifest(const Estimator& estimator,
                                              const SampleManifest& manifest,
                                              const BatchOptions& options = {});

}  // namespace greenview
