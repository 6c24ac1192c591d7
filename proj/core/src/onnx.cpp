#include "greenview/onnx.hpp"

#include <optional>
#include <set>

#include "greenview/error.hpp"

namespace greenview {

namespace {

// Minimal protobuf wire-format cursor. Only what the ONNX schema needs:
// varints, length-delimited fields, and skipping fixed-width fields.
class WireReader {
 public:
  explicit WireReader(std::span<const std::uint8_t> data) : data_(data) {}

  bool done() const noexcept { return pos_ >= data_.size(); }

  std::uint64_t varint() {
    std::uint64_t value = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (done()) fail("truncated varint");
      const std::uint8_t byte = data_[pos_++];
      value |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
      if ((byte & 0x80) == 0) return value;
    }
    fail("varint too long");
  }

  struct Field {
    std::uint32_t number;
    std::uint32_t wire_type;
  };

  Field tag() {
    const auto t = varint();
    return {static_cast<std::uint32_t>(t >> 3), static_cast<std::uint32_t>(t & 7)};
  }

  std::span<const std::uint8_t> bytes() {
    const auto len = varint();
    if (len > data_.size() - pos_) fail("length-delimited field overruns buffer");
    auto out = data_.subspan(pos_, static_cast<std::size_t>(len));
    pos_ += static_cast<std::size_t>(len);
    return out;
  }

  std::string string() {
    const auto b = bytes();
    return std::string(b.begin(), b.end());
  }

  void skip(std::uint32_t wire_type) {
    switch (wire_type) {
      case 0: varint(); return;
      case 1: advance(8); return;
      case 2: bytes(); return;
      case 5: advance(4); return;
      default: fail("unsupported wire type " + std::to_string(wire_type));
    }
  }

 private:
  void advance(std::size_t n) {
    if (n > data_.size() - pos_) fail("fixed-width field overruns buffer");
    pos_ += n;
  }

  [[noreturn]] static void fail(const std::string& what) {
    throw Error(ErrorCode::IncompatibleModel, "malformed ONNX protobuf: " + what);
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::int64_t> parse_shape(std::span<const std::uint8_t> shape_bytes) {
  std::vector<std::int64_t> dims;
  WireReader shape(shape_bytes);
  while (!shape.done()) {
    const auto f = shape.tag();
    if (f.number != 1 || f.wire_type != 2) {
      shape.skip(f.wire_type);
      continue;
    }
    std::int64_t dim = -1;
    WireReader d(shape.bytes());
    while (!d.done()) {
      const auto df = d.tag();
      if (df.number == 1 && df.wire_type == 0)
        dim = static_cast<std::int64_t>(d.varint());
      else
        d.skip(df.wire_type);
    }
    dims.push_back(dim);
  }
  return dims;
}

struct ValueInfo {
  std::string name;
  std::vector<std::int64_t> dims;
};

// ValueInfoProto { name = 1; type = 2 } -> TypeProto { tensor_type = 1 }
// -> Tensor { elem_type = 1; shape = 2 } -> TensorShapeProto { dim = 1 }.
ValueInfo parse_value_info(std::span<const std::uint8_t> bytes) {
  ValueInfo info;
  WireReader r(bytes);
  while (!r.done()) {
    const auto f = r.tag();
    if (f.number == 1 && f.wire_type == 2) {
      info.name = r.string();
    } else if (f.number == 2 && f.wire_type == 2) {
      WireReader type(r.bytes());
      while (!type.done()) {
        const auto tf = type.tag();
        if (tf.number != 1 || tf.wire_type != 2) {
          type.skip(tf.wire_type);
          continue;
        }
        WireReader tensor(type.bytes());
        while (!tensor.done()) {
          const auto xf = tensor.tag();
          if (xf.number == 2 && xf.wire_type == 2)
            info.dims = parse_shape(tensor.bytes());
          else
            tensor.skip(xf.wire_type);
        }
      }
    } else {
      r.skip(f.wire_type);
    }
  }
  return info;
}

std::string tensor_name(std::span<const std::uint8_t> bytes) {
  WireReader r(bytes);
  while (!r.done()) {
    const auto f = r.tag();
    if (f.number == 8 && f.wire_type == 2) return r.string();
    r.skip(f.wire_type);
  }
  return {};
}

}  // namespace

OnnxSignature read_onnx_signature(std::span<const std::uint8_t> model_bytes) {
  OnnxSignature sig;
  std::vector<ValueInfo> inputs;
  std::set<std::string> initializers;
  bool saw_graph = false;

  WireReader model(model_bytes);
  while (!model.done()) {
    const auto f = model.tag();
    if (f.number == 7 && f.wire_type == 2) {  // ModelProto.graph
      saw_graph = true;
      WireReader graph(model.bytes());
      while (!graph.done()) {
        const auto g = graph.tag();
        if (g.number == 11 && g.wire_type == 2)
          inputs.push_back(parse_value_info(graph.bytes()));
        else if (g.number == 12 && g.wire_type == 2)
          sig.output_names.push_back(parse_value_info(graph.bytes()).name);
        else if (g.number == 5 && g.wire_type == 2)
          initializers.insert(tensor_name(graph.bytes()));
        else
          graph.skip(g.wire_type);
      }
    } else if (f.number == 14 && f.wire_type == 2) {  // ModelProto.metadata_props
      WireReader entry(model.bytes());
      std::string key;
      std::string value;
      while (!entry.done()) {
        const auto e = entry.tag();
        if (e.number == 1 && e.wire_type == 2)
          key = entry.string();
        else if (e.number == 2 && e.wire_type == 2)
          value = entry.string();
        else
          entry.skip(e.wire_type);
      }
      sig.metadata[key] = value;
    } else {
      model.skip(f.wire_type);
    }
  }
  if (!saw_graph) throw Error(ErrorCode::IncompatibleModel, "ONNX model has no graph");

  // Older exporters list weights among the graph inputs; skip those.
  for (const auto& in : inputs) {
    if (initializers.count(in.name)) continue;
    sig.input_name = in.name;
    sig.input_dims = in.dims;
    return sig;
  }
  throw Error(ErrorCode::IncompatibleModel, "ONNX graph declares no data input");
}

}  // namespace greenview
