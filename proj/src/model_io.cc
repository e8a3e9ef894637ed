// Copyright 2026 The OMPQ Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ompq/model_io.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ompq/allocator.h"
#include "ompq/errors.h"

namespace ompq {

namespace {

using nlohmann::json;

// Payload values are decoded in chunks of this many floats.
constexpr std::size_t kPayloadChunk = 1 << 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>(v >> s));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>(v >> s));
}

std::uint64_t get_le(const unsigned char* bytes, int width) {
  std::uint64_t v = 0;
  for (int k = width; k-- > 0;) v = (v << 8) | bytes[k];
  return v;
}

// Bounded reader over a stream of known length.
class ByteReader {
 public:
  ByteReader(std::istream& in, std::uint64_t size) : in_(in), left_(size) {}

  std::uint64_t left() const { return left_; }

  void require(std::uint64_t n, const std::string& what) const {
    if (n > left_) {
      throw OmpqError(ErrorCode::kTruncated,
                      "truncated dump: " + what + " needs " +
                          std::to_string(n) + " bytes, " +
                          std::to_string(left_) + " remain");
    }
  }

  void read(void* dst, std::uint64_t n, const std::string& what) {
    require(n, what);
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::uint64_t>(in_.gcount()) != n) {
      throw OmpqError(ErrorCode::kTruncated,
                      "truncated dump: short read in " + what);
    }
    left_ -= n;
  }

  std::uint64_t read_uint(int width, const std::string& what) {
    unsigned char buf[8];
    read(buf, static_cast<std::uint64_t>(width), what);
    return get_le(buf, width);
  }

 private:
  std::istream& in_;
  std::uint64_t left_;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw OmpqError(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  return in;
}

OmpqError field_error(const std::string& where, const std::string& what) {
  return OmpqError(ErrorCode::kParse, where + ": " + what);
}

std::int64_t get_int(const json& obj, const std::string& key,
                     const std::string& where, std::int64_t lo,
                     std::int64_t hi) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw field_error(where + "." + key, "expected an integer");
  }
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() >
          static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw field_error(where + "." + key, "value out of range");
  }
  const std::int64_t x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw field_error(where + "." + key, "value " + std::to_string(x) +
                                             " outside [" + std::to_string(lo) +
                                             ", " + std::to_string(hi) + "]");
  }
  return x;
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<std::string_view> known) {
  for (const auto& item : obj.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw field_error(where, "unknown field '" + item.key() + "'");
    }
  }
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw OmpqError(ErrorCode::kParse, what + ": " + e.what());
  }
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_number(std::string_view cell, std::size_t line,
                    std::size_t column) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
    cell.remove_prefix(1);
  }
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) {
    cell.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw OmpqError(ErrorCode::kParse,
                    "ORM CSV line " + std::to_string(line) + ", column " +
                        std::to_string(column) + ": non-numeric cell '" +
                        std::string(cell) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw OmpqError(ErrorCode::kIo, "error reading '" + path.string() + "'");
  }
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw OmpqError(ErrorCode::kIo,
                    "cannot open '" + path.string() + "' for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) {
    throw OmpqError(ErrorCode::kIo, "error writing '" + path.string() + "'");
  }
}

// ----- activation dumps -----

void write_dump(std::span<const FeatureMatrix> features, std::ostream& out) {
  std::unordered_set<std::string> names;
  std::string header(kDumpMagic, sizeof(kDumpMagic));
  put_u32(header, kDumpVersion);
  put_u32(header, static_cast<std::uint32_t>(features.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::string buf;
  for (const FeatureMatrix& f : features) {
    if (!names.insert(f.layer_name()).second) {
      throw OmpqError(ErrorCode::kDuplicateName,
                      "duplicate layer name '" + f.layer_name() + "' in dump");
    }
    buf.clear();
    put_u32(buf, static_cast<std::uint32_t>(f.layer_name().size()));
    buf += f.layer_name();
    put_u64(buf, f.n_samples());
    put_u64(buf, f.n_features());
    buf.push_back(static_cast<char>(kDumpDtypeFloat32));
    const std::span<const double> data = f.data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const float narrow = static_cast<float>(data[k]);
      if (!std::isfinite(narrow)) {
        throw OmpqError(ErrorCode::kNonFiniteValue,
                        "layer '" + f.layer_name() + "' value at flat index " +
                            std::to_string(k) + " overflows float32");
      }
      put_u32(buf, std::bit_cast<std::uint32_t>(narrow));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw OmpqError(ErrorCode::kIo, "error writing dump");
}

void write_dump(std::span<const FeatureMatrix> features,
                const std::filesystem::path& path) {
  std::ostringstream ss(std::ios::binary);
  write_dump(features, ss);
  write_text_file(path, ss.str());
}

std::vector<FeatureMatrix> read_dump(std::istream& in, std::uint64_t size) {
  ByteReader reader(in, size);
  char magic[sizeof(kDumpMagic)];
  reader.read(magic, sizeof(magic), "magic");
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kDumpMagic))) {
    throw OmpqError(ErrorCode::kBadMagic, "not an activation dump (bad magic)");
  }
  const std::uint64_t version = reader.read_uint(4, "version");
  if (version != kDumpVersion) {
    throw OmpqError(ErrorCode::kUnsupportedVersion,
                    "unsupported dump version " + std::to_string(version));
  }
  const std::uint64_t layer_count = reader.read_uint(4, "layer count");

  std::vector<FeatureMatrix> out;
  std::unordered_set<std::string> names;
  std::vector<unsigned char> raw;
  for (std::uint64_t l = 0; l < layer_count; ++l) {
    const std::string at = "layer " + std::to_string(l);
    const std::uint64_t name_len = reader.read_uint(4, at + " name length");
    reader.require(name_len, at + " name");
    std::string name(name_len, '\0');
    reader.read(name.data(), name_len, at + " name");
    const std::uint64_t n = reader.read_uint(8, "layer '" + name + "' samples");
    const std::uint64_t p = reader.read_uint(8, "layer '" + name + "' features");
    unsigned char dtype = 0;
    reader.read(&dtype, 1, "layer '" + name + "' dtype");
    if (dtype != kDumpDtypeFloat32) {
      throw OmpqError(ErrorCode::kUnsupportedDtype,
                      "layer '" + name + "' has unsupported dtype " +
                          std::to_string(dtype));
    }
    if (!names.insert(name).second) {
      throw OmpqError(ErrorCode::kDuplicateName,
                      "duplicate layer name '" + name + "' in dump");
    }
    const std::uint64_t max_values = reader.left() / 4;
    if (p != 0 && n > max_values / p) {
      throw OmpqError(ErrorCode::kTruncated,
                      "truncated dump: layer '" + name + "' declares " +
                          std::to_string(n) + "x" + std::to_string(p) +
                          " values, " + std::to_string(reader.left()) +
                          " bytes remain");
    }
    const std::uint64_t count = n * p;
    std::vector<double> data;
    data.reserve(count);
    for (std::uint64_t done = 0; done < count;) {
      const std::uint64_t chunk = std::min<std::uint64_t>(kPayloadChunk,
                                                          count - done);
      raw.resize(chunk * 4);
      reader.read(raw.data(), chunk * 4, "layer '" + name + "' payload");
      for (std::uint64_t k = 0; k < chunk; ++k) {
        const float v = std::bit_cast<float>(
            static_cast<std::uint32_t>(get_le(&raw[k * 4], 4)));
        if (!std::isfinite(v)) {
          throw OmpqError(ErrorCode::kNonFiniteValue,
                          "layer '" + name + "' has a non-finite value at "
                          "flat index " + std::to_string(done + k));
        }
        data.push_back(v);
      }
      done += chunk;
    }
    out.emplace_back(std::move(name), n, p, std::move(data));
  }
  if (reader.left() != 0) {
    throw OmpqError(ErrorCode::kTrailingBytes,
                    std::to_string(reader.left()) +
                        " trailing bytes after the last layer");
  }
  return out;
}

std::vector<FeatureMatrix> read_dump(const std::filesystem::path& path) {
  std::error_code ec;
  const std::uint64_t size = std::filesystem::file_size(path, ec);
  if (ec) {
    throw OmpqError(ErrorCode::kIo, "cannot open '" + path.string() + "': " +
                                        ec.message());
  }
  std::ifstream in = open_input(path);
  try {
    return read_dump(in, size);
  } catch (const OmpqError&) {
    rethrow_with_context(path.string());
  }
}

// ----- model descriptors -----

ModelDescriptor parse_descriptor(std::string_view json_text) {
  const json doc = parse_json(json_text, "model descriptor");
  if (!doc.is_object()) throw field_error("(root)", "expected an object");
  reject_unknown_keys(doc, "(root)",
                      {"format", "version", "bit_min", "bit_max", "layers"});
  ModelDescriptor model;
  if (doc.contains("bit_min")) {
    model.bit_min = static_cast<int>(get_int(doc, "bit_min", "(root)", 1, 32));
  }
  if (doc.contains("bit_max")) {
    model.bit_max = static_cast<int>(get_int(doc, "bit_max", "(root)", 1, 32));
  }
  if (!doc.contains("layers") || !doc.at("layers").is_array()) {
    throw field_error("layers", "expected an array");
  }
  const json& layers = doc.at("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const json& l = layers[i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    if (!l.is_object()) throw field_error(where, "expected an object");
    reject_unknown_keys(l, where,
                        {"name", "param_count", "mac_count", "block_id",
                         "stage_id", "fixed_weight_bit", "activation_bit"});
    for (const char* key : {"name", "param_count", "mac_count"}) {
      if (!l.contains(key)) throw field_error(where + "." + key, "missing");
    }
    LayerDescriptor d;
    if (!l.at("name").is_string()) {
      throw field_error(where + ".name", "expected a string");
    }
    d.name = l.at("name").get<std::string>();
    constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
    d.param_count =
        static_cast<std::uint64_t>(get_int(l, "param_count", where, 0, kMax));
    d.mac_count =
        static_cast<std::uint64_t>(get_int(l, "mac_count", where, 0, kMax));
    if (l.contains("block_id")) {
      d.block_id = static_cast<int>(get_int(l, "block_id", where, 0, 1 << 30));
    }
    if (l.contains("stage_id")) {
      d.stage_id = static_cast<int>(get_int(l, "stage_id", where, 0, 1 << 30));
    }
    if (l.contains("fixed_weight_bit") && !l.at("fixed_weight_bit").is_null()) {
      d.fixed_weight_bit =
          static_cast<int>(get_int(l, "fixed_weight_bit", where, 1, 32));
    }
    if (l.contains("activation_bit")) {
      d.activation_bit =
          static_cast<int>(get_int(l, "activation_bit", where, 1, 32));
    }
    model.layers.push_back(std::move(d));
  }
  try {
    model.validate();
  } catch (const OmpqError& e) {
    throw OmpqError(ErrorCode::kParse, e.what());
  }
  return model;
}

ModelDescriptor read_descriptor(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_descriptor(text);
  } catch (const OmpqError&) {
    rethrow_with_context(path.string());
  }
}

std::string descriptor_to_json(const ModelDescriptor& model) {
  json layers = json::array();
  for (const LayerDescriptor& l : model.layers) {
    json entry = {{"name", l.name},
                  {"param_count", l.param_count},
                  {"mac_count", l.mac_count},
                  {"block_id", l.block_id},
                  {"stage_id", l.stage_id},
                  {"fixed_weight_bit", nullptr},
                  {"activation_bit", l.activation_bit}};
    if (l.fixed_weight_bit) entry["fixed_weight_bit"] = *l.fixed_weight_bit;
    layers.push_back(std::move(entry));
  }
  json doc = {{"format", "ompq-model"},
              {"version", 1},
              {"bit_min", model.bit_min},
              {"bit_max", model.bit_max},
              {"layers", std::move(layers)}};
  return doc.dump(2) + "\n";
}

void write_descriptor(const ModelDescriptor& model,
                      const std::filesystem::path& path) {
  write_text_file(path, descriptor_to_json(model));
}

// ----- ORM CSV -----

std::string orm_to_csv(const OrmMatrix& k) {
  std::string out;
  for (std::size_t i = 0; i < k.order(); ++i) {
    const std::string name = k.layer_name(i);
    if (name.find_first_of(",\"\r\n") != std::string::npos) {
      throw OmpqError(ErrorCode::kInvalidArgument,
                      "layer name '" + name + "' cannot be written to CSV");
    }
    if (i > 0) out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t i = 0; i < k.order(); ++i) {
    for (std::size_t j = 0; j < k.order(); ++j) {
      if (j > 0) out += ',';
      out += format_g17(k.at(i, j));
    }
    out += '\n';
  }
  return out;
}

static OmpqError csv_shape_error(const std::string& what) {
  return OmpqError(ErrorCode::kParse, "ORM CSV shape mismatch: " + what);
}

OrmMatrix parse_orm_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw csv_shape_error("empty file");

  std::vector<std::string> names;
  for (std::string_view cell : split(lines[0], ',')) {
    names.emplace_back(cell);
  }
  const std::size_t order = names.size();
  if (lines.size() != order + 1) {
    throw csv_shape_error(std::to_string(order) + " names but " +
                          std::to_string(lines.size() - 1) + " rows");
  }
  std::vector<double> values;
  values.reserve(order * order);
  for (std::size_t r = 1; r <= order; ++r) {
    const std::vector<std::string_view> cells = split(lines[r], ',');
    if (cells.size() != order) {
      throw csv_shape_error("line " + std::to_string(r + 1) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(order));
    }
    for (std::size_t c = 0; c < order; ++c) {
      values.push_back(parse_number(cells[c], r + 1, c + 1));
    }
  }
  return OrmMatrix::from_raw(order, std::move(values), std::move(names));
}

void write_orm_csv(const OrmMatrix& k, const std::filesystem::path& path) {
  write_text_file(path, orm_to_csv(k));
}

OrmMatrix read_orm_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_orm_csv(text);
  } catch (const OmpqError&) {
    rethrow_with_context(path.string());
  }
}

// ----- allocation reports -----

std::string report_to_json(const AllocationResult& result,
                           const ModelDescriptor& model) {
  if (result.bits.size() != model.size()) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "allocation result does not match the model");
  }
  json layers = json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    const LayerDescriptor& l = model.layers[i];
    const double size = layer_size_mb(l.param_count, result.bits[i]);
    layers.push_back(
        {{"name", l.name},
         {"weight_bit", result.bits[i]},
         {"activation_bit", l.activation_bit},
         {"relaxed_bit", i < result.relaxed_bits.size()
                             ? result.relaxed_bits[i]
                             : static_cast<double>(result.bits[i])},
         {"param_count", l.param_count},
         {"size_mb", size},
         {"size_share",
          result.model_size_mb > 0.0 ? size / result.model_size_mb : 0.0}});
  }
  json doc = {{"format", "ompq-report"},
              {"version", 1},
              {"method", std::string(method_name(result.method))},
              {"objective", result.objective_value},
              {"model_size_mb", result.model_size_mb},
              {"bops_g", result.bops_g},
              {"layers", std::move(layers)}};
  return doc.dump(2) + "\n";
}

void write_report(const AllocationResult& result, const ModelDescriptor& model,
                  const std::filesystem::path& path) {
  write_text_file(path, report_to_json(result, model));
}

AllocationReport parse_report(std::string_view json_text) {
  const json doc = parse_json(json_text, "allocation report");
  AllocationReport r;
  try {
    r.method = doc.at("method").get<std::string>();
    r.objective = doc.at("objective").get<double>();
    r.model_size_mb = doc.at("model_size_mb").get<double>();
    r.bops_g = doc.at("bops_g").get<double>();
    for (const json& l : doc.at("layers")) {
      ReportLayer layer;
      layer.name = l.at("name").get<std::string>();
      layer.weight_bit = l.at("weight_bit").get<int>();
      layer.activation_bit = l.at("activation_bit").get<int>();
      layer.relaxed_bit = l.at("relaxed_bit").get<double>();
      layer.param_count = l.at("param_count").get<std::uint64_t>();
      layer.size_mb = l.at("size_mb").get<double>();
      layer.size_share = l.at("size_share").get<double>();
      r.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw OmpqError(ErrorCode::kParse,
                    std::string("allocation report: ") + e.what());
  }
  return r;
}

AllocationReport read_report(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_report(text);
  } catch (const OmpqError&) {
    rethrow_with_context(path.string());
  }
}

// ----- SVG -----

std::string render_svg(const OrmMatrix* k, const AllocationResult& result,
                       const ModelDescriptor& model) {
  constexpr double kMargin = 40.0;
  constexpr double kPanel = 400.0;
  const std::size_t layers = model.size();
  const bool heatmap = k != nullptr && k->order() > 0;
  const double chart_x = heatmap ? 2 * kMargin + kPanel : kMargin;
  const double width = chart_x + kPanel + kMargin;
  const double height = kPanel + 2 * kMargin;

  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (heatmap) {
    const double cell = kPanel / static_cast<double>(k->order());
    svg << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 10
        << "\">ORM matrix</text>\n";
    for (std::size_t i = 0; i < k->order(); ++i) {
      for (std::size_t j = 0; j < k->order(); ++j) {
        const int shade =
            static_cast<int>(std::lround(255.0 * (1.0 - k->at(i, j))));
        svg << "<rect x=\"" << kMargin + j * cell << "\" y=\""
            << kMargin + i * cell << "\" width=\"" << cell << "\" height=\""
            << cell << "\" fill=\"rgb(" << shade << ',' << shade
            << ",255)\"><title>" << xml_escape(k->layer_name(i)) << " / "
            << xml_escape(k->layer_name(j)) << ": " << k->at(i, j)
            << "</title></rect>\n";
      }
    }
  }

  int top = 1;
  for (int b : result.bits) top = std::max(top, b);
  const double bar = kPanel / static_cast<double>(std::max<std::size_t>(layers, 1));
  svg << "<text x=\"" << chart_x << "\" y=\"" << kMargin - 10
      << "\">weight bits (" << method_name(result.method) << ", "
      << result.model_size_mb << " MB)</text>\n";
  svg << "<line x1=\"" << chart_x << "\" y1=\"" << kMargin + kPanel
      << "\" x2=\"" << chart_x + kPanel << "\" y2=\"" << kMargin + kPanel
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < result.bits.size() && i < layers; ++i) {
    const double h = kPanel * result.bits[i] / top;
    svg << "<rect x=\"" << chart_x + i * bar + 0.1 * bar << "\" y=\""
        << kMargin + kPanel - h << "\" width=\"" << 0.8 * bar
        << "\" height=\"" << h << "\" fill=\"steelblue\"><title>"
        << xml_escape(model.layers[i].name) << ": " << result.bits[i]
        << " bit</title></rect>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const OrmMatrix* k, const AllocationResult& result,
               const ModelDescriptor& model,
               const std::filesystem::path& path) {
  write_text_file(path, render_svg(k, result, model));
}

}  // namespace ompq
