#include "sirfp/formats.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json_io.hpp"
#include "sirfp/error.hpp"

namespace sirfp {
namespace {

constexpr std::array<std::uint8_t, 4> kSirfMagic{0x53, 0x49, 0x52, 0x46};
constexpr std::array<std::uint8_t, 4> kSirmMagic{0x53, 0x49, 0x52, 0x4D};
constexpr std::uint32_t kMaxNameLength = 1u << 16;

class ByteWriter {
 public:
  void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void name(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  Bytes take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void magic(const std::array<std::uint8_t, 4>& expected, const char* format) {
    if (remaining() < 4 || std::memcmp(in_.data(), expected.data(), 4) != 0) {
      fail(Errc::BadMagic, std::string("not a ") + format + " stream");
    }
    pos_ += 4;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string name() {
    const std::uint32_t len = u32();
    if (len > kMaxNameLength) fail(Errc::LengthMismatch, "layer id length " + std::to_string(len));
    need(len);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
    pos_ += len;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(Errc::Truncated, "stream ends inside the header");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_version(std::uint32_t version) {
  if (version != kFormatVersion) {
    fail(Errc::VersionUnsupported, "format version " + std::to_string(version));
  }
}

// Payload must be exactly `count` f32 values, nothing more.
void check_payload(const ByteReader& r, std::uint64_t count) {
  if (r.remaining() != count * 4) {
    fail(Errc::LengthMismatch, "payload holds " + std::to_string(r.remaining()) +
                                   " bytes, expected " + std::to_string(count * 4));
  }
}

}  // namespace

Bytes write_feature_dump(const FeatureMapSet& fm) {
  ByteWriter w;
  w.raw(kSirfMagic);
  w.u32(kFormatVersion);
  w.name(fm.layer_id());
  w.u32(fm.channels());
  w.u32(fm.height());
  w.u32(fm.width());
  for (double v : fm.data()) w.f32(static_cast<float>(v));
  return w.take();
}

FeatureMapSet read_feature_dump(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic(kSirfMagic, "SIRF");
  check_version(r.u32());
  std::string layer_id = r.name();
  const std::uint32_t c = r.u32();
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  const std::uint64_t count = std::uint64_t{c} * h * w;
  check_payload(r, count);
  std::vector<double> data(count);
  for (auto& v : data) v = r.f32();
  return FeatureMapSet(std::move(layer_id), c, h, w, std::move(data));
}

Bytes write_edge_matrix(const EdgeWeightMatrix& m) {
  ByteWriter w;
  w.raw(kSirmMagic);
  w.u32(kFormatVersion);
  w.name(m.layer_id());
  w.u32(m.size());
  w.u64(m.update_count());
  w.f64(m.alpha());
  for (double v : m.weights()) w.f32(static_cast<float>(v));
  return w.take();
}

EdgeWeightMatrix read_edge_matrix(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic(kSirmMagic, "SIRM");
  check_version(r.u32());
  std::string layer_id = r.name();
  const std::uint32_t n = r.u32();
  const std::uint64_t updates = r.u64();
  const double alpha = r.f64();
  check_payload(r, std::uint64_t{n} * n);
  std::vector<double> weights(std::size_t{n} * n);
  for (auto& v : weights) v = r.f32();
  return EdgeWeightMatrix(std::move(layer_id), n, std::move(weights), updates, alpha);
}

std::string write_mask(const PruneDecision& d) { return detail::mask_to_json(d).dump(2) + "\n"; }

PruneDecision read_mask(std::string_view text) {
  return detail::mask_from_json(detail::parse_json(text, "mask document"));
}

std::string write_topology(const LayerTopology& t) {
  return detail::topology_to_json(t).dump(2) + "\n";
}

LayerTopology read_topology(std::string_view text) {
  return detail::topology_from_json(detail::parse_json(text, "topology document"));
}

std::string write_plan(const PruningPlan& p) { return detail::plan_to_json(p).dump(2) + "\n"; }

PruningPlan read_plan(std::string_view text) {
  return detail::plan_from_json(detail::parse_json(text, "plan document"));
}

Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "short write to '" + path.string() + "'");
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                 text.size()));
}

std::string file_stem_for(std::string_view layer_id) {
  std::string stem;
  stem.reserve(layer_id.size());
  for (char ch : layer_id) {
    const bool safe = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                      (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' || ch == '.';
    stem.push_back(safe ? ch : '_');
  }
  if (stem.empty() || stem == "." || stem == "..") stem = "_" + stem;
  return stem;
}

// ---------------------------------------------------------------------------

namespace detail {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::Parse, std::string(what) + ": " + e.what());
  }
}

nlohmann::ordered_json mask_to_json(const PruneDecision& d) {
  nlohmann::ordered_json j;
  j["format"] = "sirfp-mask";
  j["version"] = kFormatVersion;
  j["layer_id"] = d.layer_id();
  j["channels"] = d.channels();
  j["kept"] = d.kept();
  j["pruned"] = d.pruned();
  auto trace = nlohmann::ordered_json::array();
  for (const auto& e : d.removal_trace()) trace.push_back({e.index, e.score});
  j["removal_trace"] = std::move(trace);
  return j;
}

namespace {

std::vector<ChannelIndex> strictly_increasing(const json& j, const char* key) {
  auto values = field<std::vector<ChannelIndex>>(j, key);
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] == values[i - 1]) {
      fail(Errc::OverlapDetected, std::string("channel ") + std::to_string(values[i]) +
                                      " repeated in '" + key + "'");
    }
    if (values[i] < values[i - 1]) fail(Errc::Parse, std::string("'") + key + "' is not sorted");
  }
  return values;
}

}  // namespace

PruneDecision mask_from_json(const json& j) {
  if (j.contains("version") && field<std::uint32_t>(j, "version") != kFormatVersion) {
    fail(Errc::VersionUnsupported, "mask document version");
  }
  RemovalTrace trace;
  const auto raw = field<json>(j, "removal_trace");
  if (!raw.is_array()) fail(Errc::Parse, "'removal_trace' must be an array");
  for (const auto& entry : raw) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_unsigned() ||
        !entry[1].is_number()) {
      fail(Errc::Parse, "removal_trace entries must be [index, score]");
    }
    trace.push_back({entry[0].get<ChannelIndex>(), entry[1].get<double>()});
  }
  return PruneDecision(field<std::string>(j, "layer_id"), field<std::uint32_t>(j, "channels"),
                       strictly_increasing(j, "kept"), strictly_increasing(j, "pruned"),
                       std::move(trace));
}

nlohmann::ordered_json topology_to_json(const LayerTopology& t) {
  nlohmann::ordered_json j;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : t.layers()) {
    nlohmann::ordered_json e;
    e["id"] = l.id;
    e["kind"] = l.kind == LayerKind::Conv ? "conv" : "linear";
    e["in_channels"] = l.in_channels;
    e["out_channels"] = l.out_channels;
    e["kernel_h"] = l.kernel_h;
    e["kernel_w"] = l.kernel_w;
    e["out_h"] = l.out_h;
    e["out_w"] = l.out_w;
    e["prunable"] = l.prunable;
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  auto links = nlohmann::ordered_json::array();
  for (const auto& link : t.links()) links.push_back({{"producer", link.producer}, {"consumer", link.consumer}});
  j["links"] = std::move(links);
  j["coupled"] = t.coupled();
  return j;
}

LayerTopology topology_from_json(const json& j) {
  std::vector<LayerSpec> layers;
  for (const auto& e : field<json>(j, "layers")) {
    LayerSpec l;
    l.id = field<std::string>(e, "id");
    const auto kind = field_or<std::string>(e, "kind", "conv");
    if (kind == "conv") {
      l.kind = LayerKind::Conv;
    } else if (kind == "linear") {
      l.kind = LayerKind::Linear;
    } else {
      fail(Errc::Parse, "layer kind '" + kind + "'");
    }
    l.in_channels = field<std::uint32_t>(e, "in_channels");
    l.out_channels = field<std::uint32_t>(e, "out_channels");
    l.kernel_h = field_or<std::uint32_t>(e, "kernel_h", 1);
    l.kernel_w = field_or<std::uint32_t>(e, "kernel_w", 1);
    l.out_h = field_or<std::uint32_t>(e, "out_h", 1);
    l.out_w = field_or<std::uint32_t>(e, "out_w", 1);
    l.prunable = field_or<bool>(e, "prunable", true);
    layers.push_back(std::move(l));
  }
  std::vector<Link> links;
  if (j.contains("links")) {
    for (const auto& e : field<json>(j, "links")) {
      links.push_back({field<std::string>(e, "producer"), field<std::string>(e, "consumer")});
    }
  }
  auto coupled = field_or<std::vector<std::vector<std::string>>>(j, "coupled", {});
  return LayerTopology(std::move(layers), std::move(links), std::move(coupled));
}

nlohmann::ordered_json plan_to_json(const PruningPlan& p) {
  nlohmann::ordered_json j;
  j["t_step"] = p.t_step();
  j["stage_targets"] = p.stage_targets;
  j["alpha"] = p.alpha;
  j["max_channel_sparsity"] = p.max_channel_sparsity;
  j["metric"] = std::string(to_string(p.metric));
  j["resolution_scale"] = std::string(to_string(p.resolution_scale));
  return j;
}

PruningPlan plan_from_json(const json& j) {
  PruningPlan p;
  p.stage_targets = field<std::vector<double>>(j, "stage_targets");
  if (j.contains("t_step") && field<std::size_t>(j, "t_step") != p.stage_targets.size()) {
    fail(Errc::InvalidPlan, "t_step disagrees with the number of stage targets");
  }
  p.alpha = field_or<double>(j, "alpha", kDefaultAlpha);
  p.max_channel_sparsity = field_or<double>(j, "max_channel_sparsity", kDefaultMaxChannelSparsity);
  p.metric = parse_metric(field_or<std::string>(j, "metric", "js"));
  p.resolution_scale = parse_resolution(field_or<std::string>(j, "resolution_scale", "full"));
  p.validate();
  return p;
}

}  // namespace detail
}  // namespace sirfp
