#pragma once

// Report emitters. Output depends only on its inputs: numbers use shortest
// round-trip formatting and JSON keys keep insertion order.

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclicks/harness.hpp"
#include "rclicks/version.hpp"

namespace rclicks {

using ordered_json = nlohmann::ordered_json;

inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

inline ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

inline ordered_json to_json(const EvalConfig& c) {
  return {{"max_clicks", c.max_clicks},
          {"iou_threshold", c.iou_threshold},
          {"n_groups", c.n_groups},
          {"seed", c.master_seed},
          {"sigma", c.sigma},
          {"strategy", to_string(c.strategy)},
          {"click_model", to_string(c.click_model)},
          {"diag_fraction", c.diag_fraction},
          {"connectivity", c.connectivity},
          {"delta_mode", to_string(c.delta_mode)},
          {"sample_std_mode", to_string(c.sample_std_mode)}};
}

/// Reads the flat keys of to_json; absent keys keep the values in `base`.
inline EvalConfig config_from_json(const nlohmann::json& j, EvalConfig base = {}) {
  try {
    if (j.contains("max_clicks")) base.max_clicks = j["max_clicks"].get<int>();
    if (j.contains("iou_threshold")) base.iou_threshold = j["iou_threshold"].get<double>();
    if (j.contains("n_groups")) base.n_groups = j["n_groups"].get<int>();
    if (j.contains("seed")) base.master_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("sigma")) base.sigma = j["sigma"].get<double>();
    if (j.contains("strategy")) base.strategy = parse_strategy(j["strategy"].get<std::string>());
    if (j.contains("click_model")) base.click_model = parse_click_model(j["click_model"].get<std::string>());
    if (j.contains("diag_fraction")) base.diag_fraction = j["diag_fraction"].get<double>();
    if (j.contains("connectivity")) base.connectivity = j["connectivity"].get<int>();
    if (j.contains("delta_mode")) base.delta_mode = parse_delta_mode(j["delta_mode"].get<std::string>());
    if (j.contains("sample_std_mode")) base.sample_std_mode = parse_sample_std_mode(j["sample_std_mode"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatError, std::string("config: ") + e.what());
  }
  return base;
}

inline ordered_json tool_json() { return {{"name", kToolName}, {"version", kVersion}}; }

inline ordered_json aggregate_json(const AggregateReport& a, const EvalConfig& config, const std::string& dataset) {
  ordered_json doc;
  doc["tool"] = tool_json();
  doc["config"] = to_json(config);
  doc["dataset"] = dataset;
  doc["instances"] = a.instances;
  doc["failed_instances"] = a.failed_instances;
  doc["sample_noc_mean"] = a.sample_noc_mean;
  doc["sample_noc_std"] = a.sample_noc_std;
  doc["base_noc"] = a.base_noc;
  doc["delta_sb"] = optional_json(a.delta_sb);
  doc["delta_gr"] = optional_json(a.delta_gr);
  doc["delta_hh"] = optional_json(a.delta_hh);
  doc["nof"] = a.nof;
  doc["base_nof"] = a.base_nof;
  doc["iou_auc"] = a.iou_auc;
  doc["base_iou_auc"] = a.base_iou_auc;
  doc["nsr_at_1"] = optional_json(a.nsr_at_1);
  doc["nsr_at_max"] = optional_json(a.nsr_at_max);
  doc["group_noc"] = a.group_noc;
  doc["curves"] = {{"baseline", a.base_curve}, {to_string(config.strategy), a.sample_curve}};
  return doc;
}

inline std::string instances_csv(const std::vector<InstanceResult>& results) {
  std::ostringstream os;
  const std::size_t slots = results.empty() ? 0 : results.front().samples.size();
  os << "id,base_noc,base_converged,sample_mean_noc,sample_std_noc,failed";
  for (std::size_t g = 1; g <= slots; ++g) os << ",noc_" << g;
  os << '\n';
  for (const auto& r : results) {
    os << r.id << ',' << r.baseline.noc << ',' << (r.baseline.converged ? 1 : 0) << ','
       << format_number(r.sample_mean_noc) << ',' << format_number(r.sample_std_noc) << ',' << (r.failed() ? 1 : 0);
    for (const auto& t : r.samples) os << ',' << t.noc;
    os << '\n';
  }
  return os.str();
}

struct Curve {
  std::string name;
  std::vector<double> mean_iou;  // after click 1..n
};

inline std::vector<Curve> curves_from_report(const nlohmann::json& doc) {
  std::vector<Curve> out;
  try {
    for (const auto& [name, values] : doc.at("curves").items()) out.push_back({name, values.get<std::vector<double>>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatError, std::string("report has no usable curves: ") + e.what());
  }
  return out;
}

inline std::string curves_csv(const std::vector<Curve>& curves) {
  std::ostringstream os;
  os << "clicks";
  std::size_t n = 0;
  for (const auto& c : curves) {
    os << ',' << c.name;
    n = std::max(n, c.mean_iou.size());
  }
  os << '\n';
  for (std::size_t k = 0; k < n; ++k) {
    os << k + 1;
    for (const auto& c : curves) os << ',' << (k < c.mean_iou.size() ? format_number(c.mean_iou[k]) : "");
    os << '\n';
  }
  return os.str();
}

/// Mean IoU against click count, one polyline per curve.
inline std::string curves_svg(const std::vector<Curve>& curves) {
  constexpr int kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t n = 1;
  for (const auto& c : curves) n = std::max(n, c.mean_iou.size());
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](std::size_t k) { return kLeft + (n == 1 ? 0.0 : pw * static_cast<double>(k) / static_cast<double>(n - 1)); };
  auto py = [&](double v) { return kTop + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << f(py(0)) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << f(py(0))
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << f(py(0))
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << f(py(v) + 4) << "\" text-anchor=\"end\">" << f(v) << "</text>\n";
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (n > 10 && (k + 1) % 5 != 0 && k != 0) continue;
    os << "<text x=\"" << f(px(k)) << "\" y=\"" << f(py(0) + 18) << "\" text-anchor=\"middle\">" << k + 1 << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">clicks</text>\n";
  os << "<text x=\"15\" y=\"" << f(kTop + ph / 2) << "\" transform=\"rotate(-90 15 " << f(kTop + ph / 2)
     << ")\" text-anchor=\"middle\">mean IoU</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto* color = kColors[i % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < curves[i].mean_iou.size(); ++k) {
      os << (k ? " " : "") << f(px(k)) << ',' << f(py(curves[i].mean_iou[k]));
    }
    os << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << f(py(0) - 10 - 16.0 * static_cast<double>(i))
       << "\" text-anchor=\"end\" fill=\"" << color << "\">" << curves[i].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace rclicks
