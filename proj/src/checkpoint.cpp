#include "bibleqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bqa {

namespace {

constexpr char kMagic[4] = {'B', 'Q', 'A', 'C'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

const char* dtype_name(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }
std::size_t dtype_size(const std::string& dtype) { return dtype == "f32" ? 4 : 8; }

nlohmann::ordered_json config_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["input_dim"] = c.input_dim;
  j["hidden"] = c.hidden;
  j["filters"] = c.filters;
  j["window"] = c.window;
  j["dropout"] = c.dropout;
  j["readout"] = c.readout == BidafReadout::MaxPool ? "max-pool" : "final-state";
  j["precision"] = dtype_name(c.precision);
  return j;
}

ModelConfig config_from_json(const std::string& kind, const nlohmann::json& j) {
  ModelConfig c;
  c.kind = parse_model_kind(kind);
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.filters = j.at("filters").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.readout = j.at("readout").get<std::string>() == "max-pool" ? BidafReadout::MaxPool : BidafReadout::FinalState;
  c.precision = j.at("precision").get<std::string>() == "f32" ? Precision::F32 : Precision::F64;
  return c;
}

}  // namespace

Checkpoint make_checkpoint(const PairModel& model) { return Checkpoint{kCheckpointVersion, model.config(), model.params()}; }

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const std::string dtype = dtype_name(ckpt.config.precision);
  nlohmann::ordered_json manifest;
  manifest["model_kind"] = to_string(ckpt.config.kind);
  manifest["config"] = config_json(ckpt.config);
  manifest["tensors"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : ckpt.params) {
    manifest["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"dtype", dtype}});
  }
  const std::string text = manifest.dump();

  std::string out(kMagic, 4);
  put_u32(out, ckpt.version);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& [_, t] : ckpt.params)
    for (double v : t.values()) {
      if (dtype == "f32") {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        put_u64(out, std::bit_cast<std::uint64_t>(v));
      }
    }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 12) throw CheckpointError(CheckpointErrorKind::Truncated, "checkpoint shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError(CheckpointErrorKind::BadMagic, "bad checkpoint magic");
  Checkpoint ckpt;
  ckpt.version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (ckpt.version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorKind::UnsupportedVersion,
                          "unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  const auto manifest_len = static_cast<std::size_t>(get_le(bytes, 8, 4));
  if (bytes.size() < 12 + manifest_len) throw CheckpointError(CheckpointErrorKind::Truncated, "truncated manifest");

  struct Entry {
    std::string name;
    Shape shape;
    std::string dtype;
  };
  std::vector<Entry> entries;
  try {
    const auto manifest = nlohmann::json::parse(bytes.substr(12, manifest_len));
    ckpt.config = config_from_json(manifest.at("model_kind").get<std::string>(), manifest.at("config"));
    for (const auto& t : manifest.at("tensors")) {
      Entry e{t.at("name").get<std::string>(), t.at("shape").get<Shape>(), t.at("dtype").get<std::string>()};
      if (e.dtype != "f32" && e.dtype != "f64") throw CheckpointError(CheckpointErrorKind::BadManifest, "unknown dtype " + e.dtype);
      entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointErrorKind::BadManifest, std::string("bad manifest: ") + e.what());
  } catch (const ValidationError& e) {
    throw CheckpointError(CheckpointErrorKind::BadManifest, std::string("bad manifest: ") + e.what());
  }

  std::size_t expected = 0;
  for (const auto& e : entries) expected += shape_numel(e.shape) * dtype_size(e.dtype);
  const std::size_t payload = bytes.size() - 12 - manifest_len;
  if (payload != expected) {
    throw CheckpointError(CheckpointErrorKind::LengthMismatch, "manifest describes " + std::to_string(expected) +
                                                                   " payload bytes, file holds " + std::to_string(payload));
  }

  std::size_t at = 12 + manifest_len;
  for (const auto& e : entries) {
    const std::size_t n = shape_numel(e.shape);
    std::vector<double> values(n);
    const std::size_t width = dtype_size(e.dtype);
    for (std::size_t i = 0; i < n; ++i, at += width) {
      values[i] = width == 4 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, at, 4))))
                             : std::bit_cast<double>(get_le(bytes, at, 8));
    }
    try {
      ckpt.params.add(e.name, Tensor(e.shape, std::move(values)));
    } catch (const ValidationError& err) {
      throw CheckpointError(CheckpointErrorKind::BadManifest, err.what());
    }
  }

  const ParameterSet expected_shapes = PairModel::parameter_shapes(ckpt.config);
  if (expected_shapes.names() != ckpt.params.names()) {
    throw CheckpointError(CheckpointErrorKind::ShapeMismatch, "tensor names do not match a " +
                                                                  to_string(ckpt.config.kind) + " model");
  }
  for (const auto& [name, t] : expected_shapes) {
    if (ckpt.params.at(name).shape() != t.shape()) {
      throw CheckpointError(CheckpointErrorKind::ShapeMismatch, name + ": manifest shape " +
                                                                    shape_str(ckpt.params.at(name).shape()) +
                                                                    ", config implies " + shape_str(t.shape()));
    }
  }
  return ckpt;
}

PairModel load_checkpoint(std::string_view bytes) {
  Checkpoint c = parse_checkpoint(bytes);
  return PairModel(c.config, std::move(c.params));
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

// ---- transfer -------------------------------------------------------------------

TransferReport transfer_weights(const Checkpoint& source, PairModel& target) {
  if (source.config.kind != target.kind()) {
    throw ValidationError("cannot transfer " + to_string(source.config.kind) + " weights into a " +
                          to_string(target.kind()) + " model");
  }
  TransferReport report;
  ParameterSet updated = target.params();
  for (auto& [name, dst] : updated) {
    if (!source.params.contains(name)) {
      report.skipped.push_back(name);
      continue;
    }
    const Tensor& src = source.params.at(name);
    if (src.shape() == dst.shape()) {
      dst = src;
      report.copied.push_back(name);
      continue;
    }
    const auto from = PairModel::input_layout(source.config, name);
    const auto to = target.input_layout(name);
    const bool extendable = from && to && from->blocks == to->blocks && from->trailing_rows == to->trailing_rows &&
                            from->input_dim < to->input_dim && src.rank() == 2 && dst.rank() == 2 &&
                            src.extent(1) == dst.extent(1);
    if (!extendable) {
      throw ShapeError("cannot transfer " + name + ": source " + shape_str(src.shape()) + ", target " +
                       shape_str(dst.shape()));
    }
    const std::size_t cols = dst.extent(1);
    Tensor grown(dst.shape());
    auto copy_row = [&](std::size_t from_row, std::size_t to_row) {
      std::copy_n(src.values().data() + from_row * cols, cols, grown.values().data() + to_row * cols);
    };
    for (std::size_t b = 0; b < from->blocks; ++b)
      for (std::size_t r = 0; r < from->input_dim; ++r) copy_row(b * from->input_dim + r, b * to->input_dim + r);
    for (std::size_t r = 0; r < from->trailing_rows; ++r)
      copy_row(from->blocks * from->input_dim + r, to->blocks * to->input_dim + r);
    dst = std::move(grown);
    report.extended.push_back(name);
  }
  target.params() = std::move(updated);
  return report;
}

}  // namespace bqa
