#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace greenview {

/// Declared graph interface of an ONNX model, read straight from the
/// protobuf without any runtime. Symbolic dimensions are reported as -1.
struct OnnxSignature {
  std::string input_name;
  std::vector<std::int64_t> input_dims;
  std::vector<std::string> output_names;
  std::map<std::string, std::string> metadata;
};

/// Throws IncompatibleModel when the buffer is not a parseable ONNX model
/// with at least one non-initializer graph input.
OnnxSignature read_onnx_signature(std::span<const std::uint8_t> model_bytes);

}  // namespace greenview
