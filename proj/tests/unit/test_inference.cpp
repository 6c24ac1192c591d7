#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "greenview/baseline.hpp"
#include "greenview/error.hpp"
#include "greenview/inference.hpp"
#include "greenview/metrics.hpp"
#include "support.hpp"

using namespace greenview;
using greenview::testing::TempDir;

namespace {

std::filesystem::path model(const char* name) {
  return greenview::testing::fixture_dir() / "models" / name;
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

/// Left half (rounded down) green, right half gray.
RasterImage half_green(std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> px(w * h * 3, 128);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w / 2; ++x) {
      px[(y * w + x) * 3] = 20;
      px[(y * w + x) * 3 + 1] = 220;
      px[(y * w + x) * 3 + 2] = 30;
    }
  return RasterImage("half", w, h, std::move(px));
}

VegetationMask left_half(std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> bits(w * h, 0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w / 2; ++x) bits[y * w + x] = 1;
  return VegetationMask(w, h, std::move(bits));
}

}  // namespace

TEST(Estimate, BaselineOnGreenImage) {
  const auto est = open_baseline_backend({});
  EXPECT_EQ(est->kind(), EstimatorKind::Baseline);
  EXPECT_TRUE(est->produces_mask());
  const auto r = estimate(*est, RasterImage::filled("g", 20, 20, {0, 255, 0}));
  EXPECT_EQ(r.id, "g");
  EXPECT_EQ(r.gvi.value(), 100.0);
  EXPECT_EQ(r.gvi.source(), Source::Baseline);
  ASSERT_TRUE(r.mask);
  EXPECT_EQ(r.mask->vegetation_pixel_count(), 400u);
  EXPECT_GE(r.latency_s, 0.0);
}

TEST(Estimate, MaskBackendPassesStoredMaskThrough) {
  TempDir tmp;
  SeededRng rng(1);
  const auto stored = greenview::testing::random_mask(rng, 9, 7);
  mask_to_png(stored, tmp / "street_1.png");
  const auto est = open_mask_backend(tmp.path());
  const auto r = estimate(*est, RasterImage::filled("street_1", 9, 7, {}));
  EXPECT_EQ(*r.mask, stored);
  EXPECT_EQ(r.gvi.value(), gvi_of_mask(stored).value());
  EXPECT_EQ(r.gvi.source(), Source::MaskBackend);

  EXPECT_EQ(code_of([&] { estimate(*est, RasterImage::filled("absent", 9, 7, {})); }),
            ErrorCode::MissingMaskFile);
  EXPECT_EQ(code_of([&] { estimate(*est, RasterImage::filled("street_1", 8, 7, {})); }),
            ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { open_mask_backend(tmp / "nope"); }), ErrorCode::UnreadableFile);
}

TEST(Estimate, DirectEstimateStub) {
  const auto est = open_constant_backend(12.5);
  EXPECT_FALSE(est->produces_mask());
  const auto r = estimate(*est, RasterImage::filled("x", 3, 3, {}));
  EXPECT_EQ(r.gvi.value(), 12.5);
  EXPECT_EQ(r.gvi.source(), Source::DirectEstimate);
  EXPECT_FALSE(r.mask);
}

TEST(Estimate, ReferentiallyTransparentAndConsistent) {
  SeededRng rng(6);
  const auto est = open_baseline_backend({});
  for (int i = 0; i < 10; ++i) {
    const auto img = greenview::testing::random_scene(rng, 40, 30);
    const auto a = estimate(*est, img);
    const auto b = estimate(*est, img);
    EXPECT_EQ(a.gvi.value(), b.gvi.value());
    EXPECT_EQ(*a.mask, *b.mask);
    EXPECT_EQ(a.gvi.value(), gvi_of_mask(*a.mask).value());
  }
}

TEST(ModelBackend, LogitsModelWithSidecarResizesBothWays) {
  const auto est = open_model_backend(model("seg_logits.onnx"), ModelKind::Segmentation);
  EXPECT_EQ(est->kind(), EstimatorKind::MaskBackend);
  // Declared input is 32x32; this image is 64x48 and must come back at 64x48.
  const auto img = half_green(64, 48);
  const auto r = estimate(*est, img);
  ASSERT_TRUE(r.mask);
  EXPECT_EQ(r.mask->width(), 64u);
  EXPECT_EQ(r.mask->height(), 48u);
  EXPECT_GE(iou(*r.mask, left_half(64, 48)), 0.9);
  EXPECT_EQ(r.gvi.value(), gvi_of_mask(*r.mask).value());
}

TEST(ModelBackend, SidecarNormalizationApplied) {
  // g - (r+b)/2 = 20/255: vegetation with the sidecar's 0.5/0.5 constants,
  // background without them.
  const auto pixel = RasterImage::filled("p", 32, 32, {100, 120, 100});
  const auto with_sidecar = open_model_backend(model("seg_logits.onnx"), ModelKind::Segmentation);
  EXPECT_EQ(estimate(*with_sidecar, pixel).gvi.value(), 100.0);

  TempDir tmp;
  std::filesystem::copy_file(model("seg_logits.onnx"), tmp / "bare.onnx");
  const auto bare = open_model_backend(tmp / "bare.onnx", ModelKind::Segmentation);
  EXPECT_EQ(estimate(*bare, pixel).gvi.value(), 0.0);
}

TEST(ModelBackend, SigmoidModelUsesEmbeddedMetadataAndSidecarWins) {
  const auto pixel = RasterImage::filled("p", 10, 6, {102, 112, 102});
  const auto est = open_model_backend(model("seg_sigmoid.onnx"), ModelKind::Segmentation);
  EXPECT_EQ(estimate(*est, pixel).gvi.value(), 100.0);
  EXPECT_EQ(estimate(*est, RasterImage::filled("g", 10, 6, {128, 128, 128})).gvi.value(), 0.0);

  TempDir tmp;
  std::filesystem::copy_file(model("seg_sigmoid.onnx"), tmp / "m.onnx");
  std::ofstream(tmp / "m.json") << R"({"std": [1, 1, 1]})";
  const auto overridden = open_model_backend(tmp / "m.onnx", ModelKind::Segmentation);
  EXPECT_EQ(estimate(*overridden, pixel).gvi.value(), 0.0);
}

TEST(ModelBackend, DynamicInputRunsAtNativeSize) {
  const auto est = open_model_backend(model("seg_sigmoid.onnx"), ModelKind::Segmentation);
  const auto r = estimate(*est, half_green(37, 23));
  EXPECT_EQ(*r.mask, left_half(37, 23));
}

TEST(ModelBackend, RegressionClampsAndConstant) {
  const auto neg = open_model_backend(model("regress_negative.onnx"), ModelKind::Regression);
  EXPECT_EQ(neg->kind(), EstimatorKind::DirectEstimate);
  const auto r = estimate(*neg, RasterImage::filled("x", 8, 8, {}));
  EXPECT_EQ(r.gvi.value(), 0.0);
  EXPECT_FALSE(r.mask);
  const auto c = open_model_backend(model("regress_constant.onnx"), ModelKind::Regression);
  EXPECT_NEAR(estimate(*c, RasterImage::filled("x", 50, 20, {})).gvi.value(), 12.5, 1e-6);
}

TEST(ModelBackend, RegressionSeesThePicture) {
  const auto est = open_model_backend(model("regress_green_share.onnx"), ModelKind::Regression);
  EXPECT_NEAR(estimate(*est, half_green(16, 16)).gvi.value(), 50.0, 1e-4);
  EXPECT_NEAR(estimate(*est, RasterImage::filled("g", 16, 16, {0, 255, 0})).gvi.value(), 100.0, 1e-4);
}

TEST(ModelBackend, ThreeChannelModelAcceptsAnyValidImage) {
  const auto est = open_model_backend(model("seg_logits.onnx"), ModelKind::Segmentation);
  for (auto [w, h] : {std::pair{1, 1}, std::pair{32, 32}, std::pair{200, 3}})
    EXPECT_NO_THROW(estimate(*est, RasterImage::filled("x", w, h, {9, 9, 9})));
}

TEST(ModelBackend, IncompatibleSignatures) {
  EXPECT_EQ(code_of([] { open_model_backend(model("bad_input_channels.onnx"), ModelKind::Segmentation); }),
            ErrorCode::IncompatibleModel);
  EXPECT_EQ(code_of([] { open_model_backend(model("bad_output_channels.onnx"), ModelKind::Segmentation); }),
            ErrorCode::IncompatibleModel);
  EXPECT_EQ(code_of([] { open_model_backend(model("seg_logits.onnx"), ModelKind::Regression); }),
            ErrorCode::IncompatibleModel);
  EXPECT_EQ(code_of([] { open_model_backend(model("regress_constant.onnx"), ModelKind::Segmentation); }),
            ErrorCode::IncompatibleModel);
  EXPECT_EQ(code_of([] { open_model_backend(model("missing.onnx"), ModelKind::Segmentation); }),
            ErrorCode::BackendFailure);
}

TEST(ModelBackend, ConcurrentCallersAgree) {
  const auto est = open_model_backend(model("seg_logits.onnx"), ModelKind::Segmentation);
  SeededRng rng(8);
  std::vector<RasterImage> images;
  for (int i = 0; i < 8; ++i) images.push_back(greenview::testing::random_scene(rng, 40, 40));
  std::vector<double> serial;
  for (const auto& img : images) serial.push_back(estimate(*est, img).gvi.value());
  std::vector<double> parallel(images.size());
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < 4; ++t)
      threads.emplace_back([&, t] {
        for (std::size_t i = t; i < images.size(); i += 4) parallel[i] = estimate(*est, images[i]).gvi.value();
      });
  }
  EXPECT_EQ(parallel, serial);
}

TEST(EstimateManifest, SortedAndIndependentOfWorkers) {
  TempDir tmp;
  greenview::testing::SyntheticDatasetOptions opts;
  opts.images = 12;
  const auto manifest = greenview::testing::write_synthetic_dataset(tmp.path(), opts);
  const auto est = open_baseline_backend({});
  BatchOptions one;
  BatchOptions four;
  four.workers = 4;
  std::vector<std::string> seen;
  four.on_result = [&](const ManifestEntry& e, const EstimateResult&) { seen.push_back(e.id); };
  const auto a = estimate_manifest(*est, manifest, one);
  const auto b = estimate_manifest(*est, manifest, four);
  ASSERT_EQ(a.size(), 12u);
  EXPECT_EQ(seen.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].gvi.value(), b[i].gvi.value());
    if (i > 0) EXPECT_LT(a[i - 1].id, a[i].id);
  }
}

TEST(LoadEntryImage, StampsIdAndMetadata) {
  TempDir tmp;
  greenview::testing::SyntheticDatasetOptions opts;
  opts.images = 2;
  const auto manifest = greenview::testing::write_synthetic_dataset(tmp.path(), opts);
  const auto img = load_entry_image(manifest, manifest.entries()[1]);
  EXPECT_EQ(img.id(), manifest.entries()[1].id);
  EXPECT_EQ(img.metadata().city, manifest.entries()[1].city);
  EXPECT_EQ(img.metadata().location, manifest.entries()[1].location);
  EXPECT_EQ(img.metadata().pose, manifest.entries()[1].pose);
}
