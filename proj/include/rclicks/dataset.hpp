#pragma once

// Released click data and benchmark manifests: the click CSV schema, click
// and batch validity rules, grouping, and instance manifests.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rclicks/click.hpp"
#include "rclicks/click_sim.hpp"
#include "rclicks/error.hpp"
#include "rclicks/harness.hpp"
#include "rclicks/image_io.hpp"
#include "rclicks/imaging.hpp"
#include "rclicks/probability_map.hpp"

namespace rclicks {

enum class ClickType { kFirst, kFalsePositive, kFalseNegative };

inline const char* to_string(ClickType t) {
  switch (t) {
    case ClickType::kFirst: return "first";
    case ClickType::kFalsePositive: return "fp";
    case ClickType::kFalseNegative: return "fn";
  }
  return "first";
}

inline std::optional<ClickType> parse_click_type(std::string_view s) {
  if (s == "first") return ClickType::kFirst;
  if (s == "fp") return ClickType::kFalsePositive;
  if (s == "fn") return ClickType::kFalseNegative;
  return std::nullopt;
}

struct ClickRecord {
  std::string dataset;
  std::string image_stem;
  std::string object_stem;
  std::string model_type;  // empty for first-round clicks
  ClickType click_type = ClickType::kFirst;
  std::string full_stem;
  Device device = Device::kPc;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;

  /// Click at record resolution; negative only for clicks on false positives.
  Click click() const {
    return Click{x, y, click_type == ClickType::kFalsePositive ? Polarity::kNegative : Polarity::kPositive,
                 click_type == ClickType::kFirst ? 1 : 2, device};
  }
};

inline constexpr std::string_view kClickColumns[] = {"dataset", "image_stem", "object_stem", "model_type",
                                                     "click_type", "full_stem", "device", "x",
                                                     "y", "w", "h"};

inline std::string clicks_csv_header() {
  std::string out;
  for (std::size_t i = 0; i < std::size(kClickColumns); ++i) {
    if (i) out += ',';
    out += kClickColumns[i];
  }
  return out + "\n";
}

/// One CSV row in canonical column order.
inline std::string to_csv_row(const ClickRecord& r) {
  std::ostringstream os;
  os << r.dataset << ',' << r.image_stem << ',' << r.object_stem << ',' << r.model_type << ','
     << to_string(r.click_type) << ',' << r.full_stem << ',' << to_string(r.device) << ',' << r.x << ','
     << r.y << ',' << r.w << ',' << r.h << '\n';
  return os.str();
}

inline std::string to_csv(const std::vector<ClickRecord>& records) {
  std::string out = clicks_csv_header();
  for (const auto& r : records) out += to_csv_row(r);
  return out;
}

struct CsvOptions {
  bool skip_out_of_range = false;  // drop such rows instead of failing
};

namespace detail {

inline std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

inline int parse_int_field(const std::string& text, const std::string& where) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || p != end || text.empty()) {
    fail(ErrorKind::kFormatError, where + ": expected an integer, got '" + text + "'");
  }
  return value;
}

}  // namespace detail

/// Parses the click CSV from a stream. `source` names it in error messages.
/// Column order is free; extra columns are ignored.
inline std::vector<ClickRecord> parse_clicks_csv(std::istream& in, const std::string& source = "<stream>",
                                                 const CsvOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kFormatError, source + ": missing header row");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_commas(line);
  std::map<std::string_view, std::size_t> column;
  for (auto name : kClickColumns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::kFormatError, source + ": missing column '" + std::string(name) + "'");
    column[name] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<ClickRecord> records;
  std::vector<std::size_t> out_of_range;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_commas(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) {
      fail(ErrorKind::kFormatError, where + ": expected " + std::to_string(header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    auto field = [&](std::string_view name) -> const std::string& { return fields[column[name]]; };
    ClickRecord r;
    r.dataset = field("dataset");
    r.image_stem = field("image_stem");
    r.object_stem = field("object_stem");
    r.model_type = field("model_type");
    const auto type = parse_click_type(field("click_type"));
    if (!type) fail(ErrorKind::kFormatError, where + " column click_type: unknown value '" + field("click_type") + "'");
    r.click_type = *type;
    r.full_stem = field("full_stem");
    if (field("device") != "pc" && field("device") != "mobile") {
      fail(ErrorKind::kFormatError, where + " column device: expected pc or mobile, got '" + field("device") + "'");
    }
    r.device = parse_device(field("device"));
    r.x = detail::parse_int_field(field("x"), where + " column x");
    r.y = detail::parse_int_field(field("y"), where + " column y");
    r.w = detail::parse_int_field(field("w"), where + " column w");
    r.h = detail::parse_int_field(field("h"), where + " column h");
    if (r.click_type == ClickType::kFirst && !r.model_type.empty()) {
      fail(ErrorKind::kFormatError, where + ": first-round click with model_type '" + r.model_type + "'");
    }
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x >= r.w || r.y >= r.h) {
      out_of_range.push_back(line_no);
      continue;
    }
    records.push_back(std::move(r));
  }
  if (!out_of_range.empty() && !options.skip_out_of_range) {
    std::string rows;
    for (std::size_t i = 0; i < out_of_range.size() && i < 20; ++i) rows += (i ? "," : "") + std::to_string(out_of_range[i]);
    if (out_of_range.size() > 20) rows += ",...";
    fail(ErrorKind::kFormatError, source + ": coordinates outside the image on line(s) " + rows);
  }
  return records;
}

inline std::vector<ClickRecord> parse_clicks_csv(const std::filesystem::path& path, const CsvOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kFormatError, "cannot open " + path.string());
  return parse_clicks_csv(in, path.string(), options);
}

/// Maps record coordinates to a mask of another resolution by nearest pixel
/// (pixel centers aligned).
inline std::pair<int, int> rescale_to(int x, int y, int from_w, int from_h, int to_w, int to_h) {
  if (from_w == to_w && from_h == to_h) return {x, y};
  const int nx = static_cast<int>(std::floor((x + 0.5) * to_w / from_w));
  const int ny = static_cast<int>(std::floor((y + 0.5) * to_h / from_h));
  return {std::clamp(nx, 0, to_w - 1), std::clamp(ny, 0, to_h - 1)};
}

/// Valid when inside the mask or within the click radius of it.
inline bool validate_click(int x, int y, int record_w, int record_h, const BinaryMask& mask,
                           double diag_fraction = kDefaultDiagFraction) {
  const auto [px, py] = rescale_to(x, y, record_w, record_h, mask.width(), mask.height());
  if (mask(px, py)) return true;
  if (!mask.any()) return false;
  const double r = click_radius(mask.width(), mask.height(), diag_fraction);
  const auto d2 = squared_distance_to(mask, false);
  return static_cast<double>(d2[static_cast<std::size_t>(py) * mask.width() + px]) <= r * r;
}

inline bool validate_click(const ClickRecord& rec, const BinaryMask& mask, double diag_fraction = kDefaultDiagFraction) {
  return validate_click(rec.x, rec.y, rec.w, rec.h, mask, diag_fraction);
}

inline constexpr std::size_t kBatchSize = 10;
inline constexpr std::size_t kMinValidInBatch = 7;

inline bool validate_batch(std::span<const bool> valid) {
  if (valid.size() != kBatchSize) {
    fail(ErrorKind::kInvalidParameter, "a batch has exactly 10 clicks, got " + std::to_string(valid.size()));
  }
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true)) >= kMinValidInBatch;
}

struct ClickFilter {
  std::optional<Device> device;
  std::optional<ClickType> click_type;
  std::optional<std::string> model_type;
  std::optional<std::string> dataset;

  bool accepts(const ClickRecord& r) const {
    return (!device || r.device == *device) && (!click_type || r.click_type == *click_type) &&
           (!model_type || r.model_type == *model_type) && (!dataset || r.dataset == *dataset);
  }
};

/// Groups by full_stem, keys sorted, records in input order within a group.
inline std::map<std::string, std::vector<ClickRecord>> clicks_by_instance(const std::vector<ClickRecord>& records,
                                                                           const ClickFilter& filter = {}) {
  std::map<std::string, std::vector<ClickRecord>> out;
  for (const auto& r : records)
    if (filter.accepts(r)) out[r.full_stem].push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path gt;
  std::map<std::string, std::filesystem::path> prev_masks;  // keyed by model_type
  std::optional<std::filesystem::path> clickability_map;
  std::optional<std::string> description;
  std::string image_stem;
  std::string object_stem;
};

struct Manifest {
  std::string dataset;
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  const ManifestEntry& find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return e;
    fail(ErrorKind::kNotFound, "instance '" + id + "' not in manifest");
  }
};

/// Reads a JSON manifest; relative paths resolve against its directory and
/// every referenced file must exist.
inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kFormatError, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatError, path.string() + ": " + e.what());
  }
  Manifest m;
  m.root = path.parent_path();
  auto resolve = [&](const std::string& rel, const std::string& where) {
    const auto p = m.root / rel;
    if (!std::filesystem::exists(p)) fail(ErrorKind::kFormatError, where + ": file " + p.string() + " does not exist");
    return p;
  };
  try {
    m.dataset = doc.value("dataset", std::string());
    const auto& list = doc.at("instances");
    if (!list.is_array()) fail(ErrorKind::kFormatError, path.string() + ": 'instances' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& j = list[i];
      const std::string where = path.string() + " instances[" + std::to_string(i) + "]";
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.image = resolve(j.at("image").get<std::string>(), where);
      e.gt = resolve(j.at("gt").get<std::string>(), where);
      if (j.contains("prev_masks")) {
        for (const auto& [model, rel] : j["prev_masks"].items()) e.prev_masks[model] = resolve(rel.get<std::string>(), where);
      }
      if (j.contains("clickability_map") && !j["clickability_map"].is_null()) {
        e.clickability_map = resolve(j["clickability_map"].get<std::string>(), where);
      }
      if (j.contains("description") && !j["description"].is_null()) e.description = j["description"].get<std::string>();
      e.image_stem = j.value("image_stem", e.id);
      e.object_stem = j.value("object_stem", std::string());
      for (const auto& other : m.entries) {
        if (other.id == e.id) fail(ErrorKind::kFormatError, where + ": duplicate id '" + e.id + "'");
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatError, path.string() + ": " + e.what());
  }
  return m;
}

/// Loads masks and maps for evaluation. `prev_model` selects which
/// subsequent-round mask becomes the initial prediction (none when empty).
inline Instance load_instance(const ManifestEntry& e, const std::string& prev_model = {}) {
  auto gt = load_mask(e.gt);
  std::optional<BinaryMask> initial;
  if (!prev_model.empty()) {
    const auto it = e.prev_masks.find(prev_model);
    if (it == e.prev_masks.end()) {
      fail(ErrorKind::kFormatError, "instance '" + e.id + "' has no previous mask for model '" + prev_model + "'");
    }
    initial = load_mask(it->second);
    if (!initial->same_shape(gt)) fail(ErrorKind::kFormatError, "instance '" + e.id + "': previous mask size differs");
  }
  std::optional<ProbabilityMap> prior;
  if (e.clickability_map) prior = load_probability_map(*e.clickability_map, std::pair{gt.width(), gt.height()});
  return Instance{e.id, e.image, std::move(gt), std::move(initial), std::move(prior)};
}

inline std::vector<Instance> load_instances(const Manifest& m, const std::string& prev_model = {}) {
  std::vector<Instance> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_instance(e, prev_model));
  return out;
}

}  // namespace rclicks
