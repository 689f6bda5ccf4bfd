// rclicks command-line front end. Every subcommand loads and validates all of
// its inputs before writing anything, so a failed run leaves no outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "rclicks/rclicks.hpp"
#include "rclicks/collect_http.hpp"

namespace fs = std::filesystem;
using namespace rclicks;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitAdapter = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return kExitUsage;
    case ErrorKind::kAdapterError:
    case ErrorKind::kStartupError: return kExitAdapter;
    default: return kExitFormat;
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kFormatError, "cannot write " + path.string());
  os << content;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kFormatError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatError, path.string() + ": " + e.what());
  }
}

// builtin:oracle, builtin:empty, builtin:disk:<radius>, or a shell command
// for an external adapter.
SegmenterFactory make_factory(const std::string& adapter) {
  if (adapter == "builtin:oracle") return [] { return std::make_unique<OracleSegmenter>(); };
  if (adapter == "builtin:empty") return [] { return std::make_unique<EmptySegmenter>(); };
  if (adapter.rfind("builtin:disk:", 0) == 0) {
    const auto arg = adapter.substr(13);
    const int radius = detail::parse_int_field(arg, "--adapter");
    if (radius < 0) fail(ErrorKind::kInvalidParameter, "disk radius must be non-negative");
    return [radius] { return std::make_unique<DiskSegmenter>(radius); };
  }
  if (adapter.rfind("builtin:", 0) == 0) fail(ErrorKind::kStartupError, "unknown builtin adapter '" + adapter + "'");
  resolve_adapter_command(adapter);
  return [adapter] { return std::make_unique<SubprocessSegmenter>(adapter); };
}

// ---------------------------------------------------------------------------
// bench run
// ---------------------------------------------------------------------------

struct BenchOptions {
  std::optional<fs::path> config_file;
  std::optional<fs::path> manifest;
  std::optional<std::string> adapter;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> strategy;
  std::optional<double> sigma;
  std::optional<int> groups;
  std::optional<int> max_clicks;
  std::optional<double> threshold;
  std::optional<std::string> click_model;
  std::optional<std::string> prev_model;
  std::optional<std::string> delta_mode;
  std::optional<std::string> std_mode;
  std::optional<fs::path> clicks;
  std::optional<std::string> device;
  fs::path out;
};

struct ResolvedRun {
  EvalConfig eval;
  fs::path manifest;
  std::string adapter;
  int workers = 1;
  std::string prev_model;
  std::optional<fs::path> clicks;
  std::optional<std::string> device;
};

// Precedence: built-in defaults, then the config file, then flags.
ResolvedRun resolve_run(const BenchOptions& o) {
  ResolvedRun r;
  r.adapter = "builtin:oracle";
  nlohmann::json file = nlohmann::json::object();
  if (o.config_file) file = read_json_file(*o.config_file);
  if (!file.is_object()) fail(ErrorKind::kFormatError, "config file must hold a JSON object");
  r.eval = config_from_json(file);
  try {
    if (file.contains("manifest")) r.manifest = file["manifest"].get<std::string>();
    if (file.contains("adapter")) r.adapter = file["adapter"].get<std::string>();
    if (file.contains("workers")) r.workers = file["workers"].get<int>();
    if (file.contains("prev_model")) r.prev_model = file["prev_model"].get<std::string>();
    if (file.contains("clicks") && !file["clicks"].is_null()) r.clicks = file["clicks"].get<std::string>();
    if (file.contains("device") && !file["device"].is_null()) r.device = file["device"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatError, std::string("config: ") + e.what());
  }
  if (o.manifest) r.manifest = *o.manifest;
  if (o.adapter) r.adapter = *o.adapter;
  if (o.workers) r.workers = *o.workers;
  if (o.prev_model) r.prev_model = *o.prev_model;
  if (o.clicks) r.clicks = *o.clicks;
  if (o.device) r.device = *o.device;
  if (o.seed) r.eval.master_seed = *o.seed;
  if (o.strategy) r.eval.strategy = parse_strategy(*o.strategy);
  if (o.sigma) r.eval.sigma = *o.sigma;
  if (o.groups) r.eval.n_groups = *o.groups;
  if (o.max_clicks) r.eval.max_clicks = *o.max_clicks;
  if (o.threshold) r.eval.iou_threshold = *o.threshold;
  if (o.click_model) r.eval.click_model = parse_click_model(*o.click_model);
  if (o.delta_mode) r.eval.delta_mode = parse_delta_mode(*o.delta_mode);
  if (o.std_mode) r.eval.sample_std_mode = parse_sample_std_mode(*o.std_mode);
  if (r.manifest.empty()) fail(ErrorKind::kInvalidParameter, "no manifest given (--manifest or config 'manifest')");
  if (r.workers < 1) fail(ErrorKind::kInvalidParameter, "workers must be at least 1");
  if (r.eval.strategy == Strategy::kRealClicks && !r.clicks) {
    fail(ErrorKind::kInvalidParameter, "the real strategy needs --clicks");
  }
  r.eval.validate();
  return r;
}

ordered_json run_json(const ResolvedRun& r) {
  ordered_json j = to_json(r.eval);
  j["manifest"] = r.manifest.string();
  j["adapter"] = r.adapter;
  j["workers"] = r.workers;
  j["prev_model"] = r.prev_model;
  j["clicks"] = r.clicks ? ordered_json(r.clicks->string()) : ordered_json(nullptr);
  j["device"] = r.device ? ordered_json(*r.device) : ordered_json(nullptr);
  return j;
}

std::string first_click_csv(const std::vector<FirstClickStats>& stats) {
  std::ostringstream os;
  os << "id,clicks,failed,mean_iou,std_iou,nsr\n";
  for (const auto& s : stats) {
    os << s.id << ',' << s.clicks << ',' << s.failed << ',' << format_number(s.mean_iou) << ','
       << format_number(s.std_iou) << ',' << format_optional(s.nsr) << '\n';
  }
  return os.str();
}

// Real-click evaluation: every recorded first click of an instance is fed to
// the segmenter once and the IoU spread is reported.
std::pair<std::string, ordered_json> run_real(const ResolvedRun& r, const Manifest& manifest,
                                              const std::vector<Instance>& instances, const SegmenterFactory& factory) {
  const auto records = parse_clicks_csv(*r.clicks);
  ClickFilter filter;
  filter.click_type = ClickType::kFirst;
  if (r.device) filter.device = parse_device(*r.device);
  const auto grouped = clicks_by_instance(records, filter);
  auto segmenter = factory();
  std::vector<FirstClickStats> stats;
  for (const auto& inst : instances) {
    const auto it = grouped.find(inst.id);
    if (it == grouped.end()) continue;
    std::vector<Click> clicks;
    for (const auto& rec : it->second) {
      auto c = rec.click();
      std::tie(c.x, c.y) = rescale_to(rec.x, rec.y, rec.w, rec.h, inst.gt.width(), inst.gt.height());
      clicks.push_back(c);
    }
    stats.push_back(first_click_eval(*segmenter, inst, clicks));
  }
  if (stats.empty()) fail(ErrorKind::kInsufficientSample, "no recorded first clicks match the manifest");
  std::vector<std::optional<double>> nsr;
  std::vector<double> mean_iou;
  for (const auto& s : stats) {
    nsr.push_back(s.nsr);
    mean_iou.push_back(s.mean_iou);
  }
  ordered_json doc;
  doc["tool"] = tool_json();
  doc["config"] = to_json(r.eval);
  doc["dataset"] = manifest.dataset;
  doc["instances"] = stats.size();
  doc["mean_iou"] = detail::mean_of(mean_iou);
  doc["nsr"] = optional_json(detail::mean_defined(nsr));
  return {first_click_csv(stats), doc};
}

int cmd_bench_run(const BenchOptions& opts) {
  const auto run = resolve_run(opts);
  const auto factory = make_factory(run.adapter);
  const auto manifest = load_manifest(run.manifest);
  const auto instances = load_instances(manifest, run.prev_model);

  std::map<std::string, std::string> outputs;
  if (run.eval.strategy == Strategy::kRealClicks) {
    auto [csv, doc] = run_real(run, manifest, instances, factory);
    outputs["first_click.csv"] = std::move(csv);
    outputs["aggregate.json"] = doc.dump(2) + "\n";
  } else {
    const auto results = run_dataset(instances, factory, run.eval, run.workers);
    const auto agg = aggregate(results, run.eval);
    const auto doc = aggregate_json(agg, run.eval, manifest.dataset);
    outputs["instances.csv"] = instances_csv(results);
    outputs["aggregate.json"] = doc.dump(2) + "\n";
    outputs["curves.csv"] = curves_csv(curves_from_report(doc));
    std::size_t failed = 0;
    for (const auto& res : results) failed += res.failed() ? 1 : 0;
    if (failed) std::cerr << failed << " of " << results.size() << " instances had failed segmenter calls\n";
  }
  outputs["config.json"] = run_json(run).dump(2) + "\n";
  fs::create_directories(opts.out);
  for (const auto& [name, content] : outputs) write_file(opts.out / name, content);
  std::cout << outputs["aggregate.json"];
  return 0;
}

// ---------------------------------------------------------------------------
// maps build
// ---------------------------------------------------------------------------

struct MapsOptions {
  fs::path clicks;
  fs::path manifest;
  double sigma = kDefaultClickSigma;
  double diag_fraction = kDefaultDiagFraction;
  std::string model_type;
  std::optional<std::string> device;
  fs::path out;
};

int cmd_maps_build(const MapsOptions& o) {
  if (!(o.sigma > 0.0)) fail(ErrorKind::kInvalidParameter, "sigma must be positive");
  const auto manifest = load_manifest(o.manifest);
  const auto records = parse_clicks_csv(o.clicks);
  ClickFilter filter;
  filter.model_type = o.model_type;
  if (o.device) filter.device = parse_device(*o.device);
  const auto grouped = clicks_by_instance(records, filter);

  std::vector<std::pair<std::string, ProbabilityMap>> maps;
  for (const auto& entry : manifest.entries) {
    const auto it = grouped.find(entry.id);
    if (it == grouped.end()) continue;
    const auto gt = load_mask(entry.gt);
    std::optional<BinaryMask> prev;
    if (!o.model_type.empty()) {
      const auto p = entry.prev_masks.find(o.model_type);
      if (p == entry.prev_masks.end()) {
        fail(ErrorKind::kFormatError, "instance '" + entry.id + "' has no previous mask for '" + o.model_type + "'");
      }
      prev = load_mask(p->second);
    }
    std::map<ClickType, std::vector<Click>> by_type;
    for (const auto& rec : it->second) {
      auto c = rec.click();
      std::tie(c.x, c.y) = rescale_to(rec.x, rec.y, rec.w, rec.h, gt.width(), gt.height());
      by_type[rec.click_type].push_back(c);
    }
    for (const auto& [type, clicks] : by_type) {
      BinaryMask error = gt;
      std::string name = entry.id;
      if (prev) {
        auto regions = error_regions(*prev, gt);
        error = type == ClickType::kFalsePositive ? std::move(regions.false_positive) : std::move(regions.false_negative);
        name += "." + o.model_type + "." + to_string(type);
      }
      maps.emplace_back(name + ".bin", build_clickability_map(clicks, error, o.sigma, o.diag_fraction));
    }
  }
  if (maps.empty()) fail(ErrorKind::kInsufficientSample, "no clicks match the manifest instances");
  fs::create_directories(o.out);
  for (const auto& [name, map] : maps) {
    save_probability_map(o.out / name, map);
    std::cout << (o.out / name).string() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// metrics compare
// ---------------------------------------------------------------------------

struct CompareOptions {
  fs::path a;
  std::optional<fs::path> b;
  std::optional<std::string> model;  // dt, uniform, or a directory of <id>.bin maps
  std::optional<fs::path> manifest;
  std::optional<std::string> device;
  std::string click_type = "first";
  int permutations = 0;
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
};

// Real clicks against a clickability model: each instance is compared with
// bootstrapped samples of the same size drawn from the model map.
int compare_with_model(const CompareOptions& o) {
  if (!o.manifest) fail(ErrorKind::kInvalidParameter, "--model needs --manifest");
  const auto manifest = load_manifest(*o.manifest);
  const auto type = parse_click_type(o.click_type);
  if (!type) fail(ErrorKind::kInvalidParameter, "unknown click type '" + o.click_type + "'");
  if (*type != ClickType::kFirst) fail(ErrorKind::kInvalidParameter, "--model compares first clicks only");
  const bool builtin = *o.model == "dt" || *o.model == "uniform";
  if (!builtin && !fs::is_directory(*o.model)) fail(ErrorKind::kFormatError, "no map directory " + *o.model);
  ClickFilter filter;
  filter.click_type = ClickType::kFirst;
  if (o.device) filter.device = parse_device(*o.device);
  const auto grouped = clicks_by_instance(parse_clicks_csv(o.a), filter);

  std::ostringstream os;
  os << "id,n,pl1,wd,ks_pass_rate,nss,pde\n";
  std::vector<double> pl1s, wds, kss, nsss, pdes;
  for (const auto& e : manifest.entries) {
    const auto it = grouped.find(e.id);
    if (it == grouped.end()) continue;
    const auto gt = load_mask(e.gt);
    const auto box = bounding_box(gt);
    if (!box) fail(ErrorKind::kFormatError, "instance '" + e.id + "' has an empty mask");
    const auto map = *o.model == "dt"        ? dt_model(gt)
                     : *o.model == "uniform" ? uniform_model(gt)
                                             : load_probability_map(fs::path(*o.model) / (e.id + ".bin"),
                                                                    std::pair{gt.width(), gt.height()});
    ClickSet real{{}, Frame::from_box(*box)};
    for (const auto& r : it->second) {
      const auto [x, y] = rescale_to(r.x, r.y, r.w, r.h, gt.width(), gt.height());
      real.points.push_back({double(x), double(y)});
    }
    auto rng = stream_rng(o.seed, e.id, 0, 0);
    const auto b = bootstrap_compare(map, real, rng);
    const double n_ss = nss(map, real), p_de = pde(map, real);
    pl1s.push_back(b.pl1);
    wds.push_back(b.wd);
    kss.push_back(b.ks_pass_rate);
    nsss.push_back(n_ss);
    pdes.push_back(p_de);
    os << e.id << ',' << real.points.size() << ',' << format_number(b.pl1) << ',' << format_number(b.wd) << ','
       << format_number(b.ks_pass_rate) << ',' << format_number(n_ss) << ',' << format_number(p_de) << '\n';
  }
  if (pl1s.empty()) fail(ErrorKind::kInsufficientSample, "no clicks match the manifest instances");
  os << "mean,," << format_number(detail::mean_of(pl1s)) << ',' << format_number(detail::mean_of(wds)) << ','
     << format_number(detail::mean_of(kss)) << ',' << format_number(detail::mean_of(nsss)) << ','
     << format_number(detail::mean_of(pdes)) << '\n';
  if (o.out) {
    if (o.out->has_parent_path()) fs::create_directories(o.out->parent_path());
    write_file(*o.out, os.str());
  }
  std::cout << os.str();
  return 0;
}

int cmd_metrics_compare(const CompareOptions& o) {
  if (o.b.has_value() == o.model.has_value()) fail(ErrorKind::kInvalidParameter, "give exactly one of --b and --model");
  if (o.model) return compare_with_model(o);
  std::optional<Manifest> manifest;
  if (o.manifest) manifest = load_manifest(*o.manifest);
  const auto records_a = parse_clicks_csv(o.a);
  const auto records_b = parse_clicks_csv(*o.b);
  ClickFilter filter;
  const auto type = parse_click_type(o.click_type);
  if (!type) fail(ErrorKind::kInvalidParameter, "unknown click type '" + o.click_type + "'");
  filter.click_type = *type;
  if (o.device) filter.device = parse_device(*o.device);
  const auto ga = clicks_by_instance(records_a, filter);
  const auto gb = clicks_by_instance(records_b, filter);

  // Clicks are expressed at mask resolution and normalized by the object box
  // when a manifest is given, otherwise by the recorded image size.
  auto to_set = [&](const std::vector<ClickRecord>& recs, const std::optional<BinaryMask>& gt) {
    ClickSet s;
    for (const auto& r : recs) {
      if (gt) {
        const auto [x, y] = rescale_to(r.x, r.y, r.w, r.h, gt->width(), gt->height());
        s.points.push_back({double(x), double(y)});
      } else {
        s.points.push_back({double(r.x), double(r.y)});
      }
    }
    if (gt) {
      const auto box = bounding_box(*gt);
      if (!box) fail(ErrorKind::kFormatError, "instance '" + recs.front().full_stem + "' has an empty mask");
      s.frame = Frame::from_box(*box);
    } else {
      s.frame = Frame{0, 0, double(recs.front().w), double(recs.front().h)};
    }
    return s;
  };

  std::ostringstream os;
  os << "id,n_a,n_b,pl1,wd,ks_statistic,ks_p,ks_pass\n";
  std::vector<double> pl1s, wds;
  std::size_t ks_tested = 0, ks_passed = 0;
  for (const auto& [id, recs_a] : ga) {
    const auto it = gb.find(id);
    if (it == gb.end()) continue;
    std::optional<BinaryMask> gt;
    if (manifest) {
      const ManifestEntry* entry = nullptr;
      for (const auto& e : manifest->entries)
        if (e.id == id) entry = &e;
      if (!entry) continue;
      gt = load_mask(entry->gt);
    }
    auto sa = to_set(recs_a, gt);
    auto sb = to_set(it->second, gt);
    sb.frame = sa.frame;
    const double p = pl1(sa, sb);
    const double w = wasserstein2d(sa, sb);
    pl1s.push_back(p);
    wds.push_back(w);
    os << id << ',' << sa.points.size() << ',' << sb.points.size() << ',' << format_number(p) << ',' << format_number(w);
    if (sa.points.size() >= 3 && sb.points.size() >= 3) {
      KsResult ks;
      if (o.permutations > 0) {
        auto rng = stream_rng(o.seed, id, 0, 0);
        ks = ks2d_permutation(sa, sb, o.permutations, rng);
      } else {
        ks = ks2d(sa, sb);
      }
      ++ks_tested;
      ks_passed += ks.pass ? 1 : 0;
      os << ',' << format_number(ks.statistic) << ',' << format_number(ks.p_value) << ',' << (ks.pass ? 1 : 0) << '\n';
    } else {
      os << ",,,\n";
    }
  }
  if (pl1s.empty()) fail(ErrorKind::kInsufficientSample, "the two click sets share no instance");
  os << "mean,,," << format_number(detail::mean_of(pl1s)) << ',' << format_number(detail::mean_of(wds)) << ",,,"
     << (ks_tested ? format_number(double(ks_passed) / double(ks_tested)) : "") << '\n';
  if (o.out) {
    if (o.out->has_parent_path()) fs::create_directories(o.out->parent_path());
    write_file(*o.out, os.str());
  }
  std::cout << os.str();
  return 0;
}

// ---------------------------------------------------------------------------
// report plot
// ---------------------------------------------------------------------------

int cmd_report_plot(const std::vector<fs::path>& reports, const fs::path& out) {
  std::vector<Curve> curves;
  for (const auto& path : reports) {
    auto found = curves_from_report(read_json_file(path));
    for (auto& c : found) {
      if (reports.size() > 1) c.name = path.parent_path().filename().string() + ":" + c.name;
      curves.push_back(std::move(c));
    }
  }
  if (curves.empty()) fail(ErrorKind::kFormatError, "no curves found in the given reports");
  const auto csv = curves_csv(curves);
  const auto svg = curves_svg(curves);
  fs::create_directories(out);
  write_file(out / "curves.csv", csv);
  write_file(out / "curves.svg", svg);
  std::cout << csv;
  return 0;
}

// ---------------------------------------------------------------------------
// dataset validate
// ---------------------------------------------------------------------------

struct ValidateOptions {
  fs::path clicks;
  std::optional<fs::path> manifest;
  bool skip_out_of_range = false;
  double diag_fraction = kDefaultDiagFraction;
  std::optional<fs::path> out;
};

int cmd_dataset_validate(const ValidateOptions& o) {
  CsvOptions csv_opts;
  csv_opts.skip_out_of_range = o.skip_out_of_range;
  const auto records = parse_clicks_csv(o.clicks, csv_opts);
  std::optional<Manifest> manifest;
  if (o.manifest) manifest = load_manifest(*o.manifest);

  ordered_json summary;
  summary["records"] = records.size();
  ordered_json by_type = ordered_json::object();
  for (auto t : {ClickType::kFirst, ClickType::kFalseNegative, ClickType::kFalsePositive}) {
    by_type[to_string(t)] = std::count_if(records.begin(), records.end(), [t](const auto& r) { return r.click_type == t; });
  }
  summary["by_type"] = by_type;
  summary["instances"] = clicks_by_instance(records).size();

  std::vector<ClickRecord> valid;
  if (manifest) {
    std::map<std::string, BinaryMask> masks;
    std::size_t unknown = 0;
    for (const auto& r : records) {
      auto it = masks.find(r.full_stem);
      if (it == masks.end()) {
        const ManifestEntry* entry = nullptr;
        for (const auto& e : manifest->entries)
          if (e.id == r.full_stem) entry = &e;
        if (!entry) {
          ++unknown;
          continue;
        }
        it = masks.emplace(r.full_stem, load_mask(entry->gt)).first;
      }
      if (validate_click(r, it->second, o.diag_fraction)) valid.push_back(r);
    }
    summary["unknown_instances"] = unknown;
    summary["valid"] = valid.size();
    summary["invalid"] = records.size() - unknown - valid.size();
  }
  if (o.out) {
    if (!manifest) fail(ErrorKind::kInvalidParameter, "--out needs --manifest to decide validity");
    if (o.out->has_parent_path()) fs::create_directories(o.out->parent_path());
    write_file(*o.out, to_csv(valid));
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// collect serve
// ---------------------------------------------------------------------------

struct ServeOptions {
  fs::path manifest;
  fs::path journal = "collect_journal.csv";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;
};

int cmd_collect_serve(const ServeOptions& o) {
  const auto manifest = load_manifest(o.manifest);
  CollectStore store(collect_instances(manifest), o.journal, steady_clock_ms(), o.seed);
  httplib::Server server;
  install_collect_routes(server, store);
  std::cerr << "collect service on http://" << o.host << ':' << o.port << " (" << manifest.entries.size()
            << " instances, journal " << o.journal.string() << ")\n";
  if (!server.listen(o.host, o.port)) fail(ErrorKind::kStartupError, "cannot listen on " + o.host + ":" + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clickability-based benchmark for interactive segmentation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark a segmenter")->require_subcommand(1);
  auto* bench_run = bench_cmd->add_subcommand("run", "Run the click-simulation benchmark on a manifest");
  bench_run->add_option("--config", bench.config_file, "JSON file with flat EvalConfig keys; flags override it");
  bench_run->add_option("--manifest", bench.manifest, "Dataset manifest (JSON)");
  bench_run->add_option("--adapter", bench.adapter,
                        "Segmenter: builtin:oracle, builtin:empty, builtin:disk:<r>, or an adapter command line");
  bench_run->add_option("--seed", bench.seed, "Master seed");
  bench_run->add_option("--workers", bench.workers, "Worker threads");
  bench_run->add_option("--strategy", bench.strategy, "baseline|groups|full|real");
  bench_run->add_option("--sigma", bench.sigma, "Click smoothing sigma in pixels");
  bench_run->add_option("--groups", bench.groups, "Number of clicking groups");
  bench_run->add_option("--max-clicks", bench.max_clicks, "Click budget per instance");
  bench_run->add_option("--threshold", bench.threshold, "IoU threshold for NoC");
  bench_run->add_option("--click-model", bench.click_model, "auto|dt|uniform");
  bench_run->add_option("--prev-model", bench.prev_model, "Start from this model's previous masks");
  bench_run->add_option("--delta-mode", bench.delta_mode, "ratio-of-means|mean-of-ratios");
  bench_run->add_option("--std-mode", bench.std_mode, "mean-of-group-std|std-of-means");
  bench_run->add_option("--clicks", bench.clicks, "Recorded clicks CSV for the real strategy");
  bench_run->add_option("--device", bench.device, "Restrict recorded clicks to pc or mobile");
  bench_run->add_option("--out", bench.out, "Output directory")->required();

  MapsOptions maps;
  auto* maps_cmd = app.add_subcommand("maps", "Clickability maps")->require_subcommand(1);
  auto* maps_build = maps_cmd->add_subcommand("build", "Build clickability maps from recorded clicks");
  maps_build->add_option("--clicks", maps.clicks, "Clicks CSV")->required();
  maps_build->add_option("--manifest", maps.manifest, "Dataset manifest")->required();
  maps_build->add_option("--sigma", maps.sigma, "Click smoothing sigma in pixels");
  maps_build->add_option("--diag-fraction", maps.diag_fraction, "Error-mask blur as a fraction of the diagonal");
  maps_build->add_option("--model-type", maps.model_type, "Build subsequent-round maps for this model");
  maps_build->add_option("--device", maps.device, "Restrict to pc or mobile clicks");
  maps_build->add_option("--out", maps.out, "Output directory")->required();

  CompareOptions compare;
  auto* metrics_cmd = app.add_subcommand("metrics", "Click distribution metrics")->require_subcommand(1);
  auto* metrics_compare = metrics_cmd->add_subcommand("compare", "Compare two click sets per instance");
  metrics_compare->add_option("--a", compare.a, "First clicks CSV")->required();
  metrics_compare->add_option("--b", compare.b, "Second clicks CSV");
  metrics_compare->add_option("--model", compare.model,
                              "Compare --a with bootstrapped model clicks: dt, uniform, or a directory of <id>.bin maps");
  metrics_compare->add_option("--manifest", compare.manifest, "Manifest for object-box normalization");
  metrics_compare->add_option("--device", compare.device, "Restrict to pc or mobile clicks");
  metrics_compare->add_option("--click-type", compare.click_type, "first|fn|fp");
  metrics_compare->add_option("--permutations", compare.permutations, "Permutation KS p-values (0: asymptotic)");
  metrics_compare->add_option("--seed", compare.seed, "Seed for permutation tests and bootstrapping");
  metrics_compare->add_option("--out", compare.out, "Write the table to this CSV file");

  std::vector<fs::path> reports;
  fs::path plot_out;
  auto* report_cmd = app.add_subcommand("report", "Report utilities")->require_subcommand(1);
  auto* report_plot = report_cmd->add_subcommand("plot", "Mean IoU curves from aggregate reports");
  report_plot->add_option("--report", reports, "aggregate.json files")->required();
  report_plot->add_option("--out", plot_out, "Output directory")->required();

  ServeOptions serve;
  auto* collect_cmd = app.add_subcommand("collect", "Click collection service")->require_subcommand(1);
  auto* collect_serve = collect_cmd->add_subcommand("serve", "Serve the collection HTTP API");
  collect_serve->add_option("--manifest", serve.manifest, "Dataset manifest")->required();
  collect_serve->add_option("--journal", serve.journal, "Append-only journal file");
  collect_serve->add_option("--host", serve.host, "Bind address");
  collect_serve->add_option("--port", serve.port, "Port");
  collect_serve->add_option("--seed", serve.seed, "Seed for batch assignment");

  ValidateOptions validate;
  auto* dataset_cmd = app.add_subcommand("dataset", "Dataset utilities")->require_subcommand(1);
  auto* dataset_validate = dataset_cmd->add_subcommand("validate", "Parse and validate a clicks CSV");
  dataset_validate->add_option("--clicks", validate.clicks, "Clicks CSV")->required();
  dataset_validate->add_option("--manifest", validate.manifest, "Manifest for click validity");
  dataset_validate->add_flag("--skip-out-of-range", validate.skip_out_of_range, "Drop rows outside the image");
  dataset_validate->add_option("--diag-fraction", validate.diag_fraction, "Validity radius as a fraction of the diagonal");
  dataset_validate->add_option("--out", validate.out, "Write the valid records to this CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*bench_run) return cmd_bench_run(bench);
    if (*maps_build) return cmd_maps_build(maps);
    if (*metrics_compare) return cmd_metrics_compare(compare);
    if (*report_plot) return cmd_report_plot(reports, plot_out);
    if (*collect_serve) return cmd_collect_serve(serve);
    if (*dataset_validate) return cmd_dataset_validate(validate);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
