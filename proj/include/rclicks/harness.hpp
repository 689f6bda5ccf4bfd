#pragma once

// Multi-round evaluation of a segmenter: click trajectories per instance and
// strategy, dataset-level aggregation, correlation tables and first-click
// robustness.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rclicks/click.hpp"
#include "rclicks/click_sim.hpp"
#include "rclicks/error.hpp"
#include "rclicks/imaging.hpp"
#include "rclicks/probability_map.hpp"
#include "rclicks/rng.hpp"
#include "rclicks/segmenter.hpp"

namespace rclicks {

enum class Strategy { kBaseline, kGroups, kFullMap, kRealClicks };
enum class ClickModel { kAuto, kDistanceTransform, kUniform };
enum class DeltaMode { kRatioOfMeans, kMeanOfRatios };
enum class SampleStdMode { kMeanOfGroupStd, kStdOfMeans };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kBaseline: return "baseline";
    case Strategy::kGroups: return "groups";
    case Strategy::kFullMap: return "full";
    case Strategy::kRealClicks: return "real";
  }
  return "groups";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "baseline") return Strategy::kBaseline;
  if (s == "groups") return Strategy::kGroups;
  if (s == "full") return Strategy::kFullMap;
  if (s == "real") return Strategy::kRealClicks;
  fail(ErrorKind::kInvalidParameter, "unknown strategy '" + std::string(s) + "'");
}

inline const char* to_string(ClickModel m) {
  switch (m) {
    case ClickModel::kAuto: return "auto";
    case ClickModel::kDistanceTransform: return "dt";
    case ClickModel::kUniform: return "uniform";
  }
  return "auto";
}

inline ClickModel parse_click_model(std::string_view s) {
  if (s == "auto") return ClickModel::kAuto;
  if (s == "dt") return ClickModel::kDistanceTransform;
  if (s == "uniform") return ClickModel::kUniform;
  fail(ErrorKind::kInvalidParameter, "unknown click model '" + std::string(s) + "'");
}

inline const char* to_string(DeltaMode m) {
  return m == DeltaMode::kRatioOfMeans ? "ratio-of-means" : "mean-of-ratios";
}

inline DeltaMode parse_delta_mode(std::string_view s) {
  if (s == "ratio-of-means") return DeltaMode::kRatioOfMeans;
  if (s == "mean-of-ratios") return DeltaMode::kMeanOfRatios;
  fail(ErrorKind::kInvalidParameter, "unknown delta mode '" + std::string(s) + "'");
}

inline const char* to_string(SampleStdMode m) {
  return m == SampleStdMode::kMeanOfGroupStd ? "mean-of-group-std" : "std-of-means";
}

inline SampleStdMode parse_sample_std_mode(std::string_view s) {
  if (s == "mean-of-group-std") return SampleStdMode::kMeanOfGroupStd;
  if (s == "std-of-means") return SampleStdMode::kStdOfMeans;
  fail(ErrorKind::kInvalidParameter, "unknown sample std mode '" + std::string(s) + "'");
}

struct EvalConfig {
  int max_clicks = 20;
  double iou_threshold = 0.90;
  int n_groups = kDefaultGroups;
  std::uint64_t master_seed = 0;
  double sigma = kDefaultClickSigma;
  Strategy strategy = Strategy::kGroups;
  ClickModel click_model = ClickModel::kAuto;
  double diag_fraction = kDefaultDiagFraction;
  int connectivity = 8;
  DeltaMode delta_mode = DeltaMode::kRatioOfMeans;
  SampleStdMode sample_std_mode = SampleStdMode::kMeanOfGroupStd;

  void validate() const {
    if (max_clicks < 1) fail(ErrorKind::kInvalidParameter, "max_clicks must be at least 1");
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
      fail(ErrorKind::kInvalidParameter, "iou_threshold must lie in (0, 1]");
    }
    if (n_groups < 1) fail(ErrorKind::kInvalidParameter, "n_groups must be at least 1");
    if (!(sigma > 0.0)) fail(ErrorKind::kInvalidParameter, "sigma must be positive");
    if (!(diag_fraction > 0.0)) fail(ErrorKind::kInvalidParameter, "diag_fraction must be positive");
    if (connectivity != 4 && connectivity != 8) fail(ErrorKind::kInvalidParameter, "connectivity must be 4 or 8");
  }
};

/// One evaluation unit: an image, its target object and optional inputs for
/// subsequent-round evaluation and map-based click sampling.
struct Instance {
  std::string id;
  std::filesystem::path image;
  BinaryMask gt;
  std::optional<BinaryMask> initial;       // prediction before the first click
  std::optional<ProbabilityMap> prior;     // clickability map for sampling
};

struct Trajectory {
  std::vector<double> ious;  // after click k = 1..max_clicks, padded
  int noc = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
  std::vector<Click> clicks;
};

/// Clicks needed to reach `threshold`, or `cap` if never reached.
inline int noc(std::span<const double> ious, double threshold, int cap) {
  const int n = std::min<int>(cap, static_cast<int>(ious.size()));
  for (int k = 0; k < n; ++k)
    if (ious[k] >= threshold) return k + 1;
  return cap;
}

/// 100 x mean of the per-click IoUs.
inline double iou_auc(std::span<const double> ious) {
  if (ious.empty()) return 0.0;
  double total = 0.0;
  for (double v : ious) total += v;
  return 100.0 * total / static_cast<double>(ious.size());
}

/// Picks the next click given the error component it should correct.
using ClickPicker = std::function<Click(const ErrorTarget& target, int round)>;

inline Trajectory failed_trajectory(int max_clicks, std::string error) {
  Trajectory t;
  t.ious.assign(static_cast<std::size_t>(max_clicks), 0.0);
  t.noc = max_clicks;
  t.failed = true;
  t.error = std::move(error);
  return t;
}

/// Round loop: find the error component to fix, click on it, query the
/// segmenter with the full history, record IoU; stop at the threshold.
inline Trajectory run_instance(Segmenter& segmenter, const Instance& inst, const EvalConfig& config,
                               const ClickPicker& pick, const std::string& tag) {
  if (!inst.gt.any()) fail(ErrorKind::kInvalidParameter, "instance " + inst.id + " has an empty ground truth");
  const int w = inst.gt.width();
  const int h = inst.gt.height();
  Trajectory t;
  BinaryMask pred = inst.initial ? *inst.initial : BinaryMask(w, h);
  require_same_shape(pred, inst.gt);
  std::optional<BinaryMask> prev = inst.initial;
  if (pred == inst.gt) {
    t.ious.assign(static_cast<std::size_t>(config.max_clicks), 1.0);
    t.noc = 1;
    t.converged = true;
    return t;
  }
  for (int round = 1; round <= config.max_clicks; ++round) {
    const auto target = largest_error_region(pred, inst.gt, config.connectivity);
    Click click = pick(target, round);
    click.round = round;
    t.clicks.push_back(click);
    SegmentRequest req;
    req.id = tag + "/" + std::to_string(round);
    req.image = inst.image;
    req.width = w;
    req.height = h;
    req.clicks = t.clicks;
    req.prev_mask = prev ? &*prev : nullptr;
    req.gt = &inst.gt;
    try {
      pred = segmenter.predict(req);
      require_same_shape(pred, inst.gt);
    } catch (const Error& e) {
      auto failed = failed_trajectory(config.max_clicks, e.what());
      failed.clicks = std::move(t.clicks);
      return failed;
    }
    const double score = iou(pred, inst.gt);
    t.ious.push_back(score);
    if (score >= config.iou_threshold) {
      t.converged = true;
      break;
    }
    prev = pred;
  }
  const double last = t.ious.back();
  t.ious.resize(static_cast<std::size_t>(config.max_clicks), last);
  t.noc = noc(t.ious, config.iou_threshold, config.max_clicks);
  return t;
}

/// Clickability map for the component a click should fix.
inline ProbabilityMap click_map_for(const Instance& inst, const BinaryMask& region, const EvalConfig& config) {
  switch (config.click_model) {
    case ClickModel::kUniform: return uniform_model(region);
    case ClickModel::kDistanceTransform: return dt_model(region);
    case ClickModel::kAuto: break;
  }
  if (inst.prior) return condition_on_error(*inst.prior, region, config.diag_fraction);
  return dt_model(region);
}

inline ClickPicker baseline_picker() {
  return [](const ErrorTarget& target, int) { return center_click(target); };
}

/// Group i of a fresh partition each round; streams keyed by (group, round).
inline ClickPicker group_picker(const Instance& inst, const EvalConfig& config, int group) {
  return [&inst, &config, group](const ErrorTarget& target, int round) {
    const auto groups = partition_groups(click_map_for(inst, target.region, config), config.n_groups);
    auto rng = stream_rng(config.master_seed, inst.id, static_cast<std::uint64_t>(group),
                          static_cast<std::uint64_t>(round));
    return sample_click(groups, group, target.polarity, rng);
  };
}

/// Full-map sampling repeat `repeat`; streams offset past the group streams.
inline ClickPicker full_map_picker(const Instance& inst, const EvalConfig& config, int repeat) {
  return [&inst, &config, repeat](const ErrorTarget& target, int round) {
    const auto groups = partition_groups(click_map_for(inst, target.region, config), config.n_groups);
    auto rng = stream_rng(config.master_seed, inst.id, 0x10000u + static_cast<std::uint64_t>(repeat),
                          static_cast<std::uint64_t>(round));
    return sample_full_map(groups, target.polarity, rng);
  };
}

struct InstanceResult {
  std::string id;
  Trajectory baseline;
  std::vector<Trajectory> samples;  // G1..Gn for groups, n repeats for full-map
  double sample_mean_noc = 0.0;
  double sample_std_noc = 0.0;

  bool failed() const {
    if (baseline.failed) return true;
    return std::any_of(samples.begin(), samples.end(), [](const Trajectory& t) { return t.failed; });
  }
};

namespace detail {

inline double mean_of(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

inline double population_std(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace detail

inline void summarize_samples(InstanceResult& r) {
  if (r.samples.empty()) {
    r.sample_mean_noc = r.baseline.noc;
    r.sample_std_noc = 0.0;
    return;
  }
  std::vector<double> nocs;
  for (const auto& t : r.samples) nocs.push_back(t.noc);
  r.sample_mean_noc = detail::mean_of(nocs);
  r.sample_std_noc = detail::population_std(nocs);
}

inline InstanceResult evaluate_instance(Segmenter& segmenter, const Instance& inst, const EvalConfig& config) {
  InstanceResult r;
  r.id = inst.id;
  r.baseline = run_instance(segmenter, inst, config, baseline_picker(), inst.id + "/base");
  if (config.strategy == Strategy::kGroups) {
    for (int g = 1; g <= config.n_groups; ++g) {
      r.samples.push_back(run_instance(segmenter, inst, config, group_picker(inst, config, g),
                                       inst.id + "/g" + std::to_string(g)));
    }
  } else if (config.strategy == Strategy::kFullMap) {
    for (int k = 1; k <= config.n_groups; ++k) {
      r.samples.push_back(run_instance(segmenter, inst, config, full_map_picker(inst, config, k),
                                       inst.id + "/full" + std::to_string(k)));
    }
  } else if (config.strategy == Strategy::kRealClicks) {
    fail(ErrorKind::kInvalidParameter, "real-click strategy is evaluated with first_click_eval");
  }
  summarize_samples(r);
  return r;
}

/// Evaluates every instance on a pool of `workers` threads, each with its own
/// segmenter. Results are stored by instance index, so the output does not
/// depend on scheduling.
inline std::vector<InstanceResult> run_dataset(std::span<const Instance> instances, const SegmenterFactory& factory,
                                               const EvalConfig& config, int workers = 1) {
  config.validate();
  if (workers < 1) fail(ErrorKind::kInvalidParameter, "workers must be at least 1");
  std::vector<std::optional<InstanceResult>> slots(instances.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      auto segmenter = factory();
      for (std::size_t i = next++; i < instances.size(); i = next++) {
        slots[i] = evaluate_instance(*segmenter, instances[i], config);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      next = instances.size();
    }
  };
  const int n = std::min<int>(workers, std::max<int>(1, static_cast<int>(instances.size())));
  {
    std::vector<std::jthread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(work);
    work();
  }
  if (first_error) std::rethrow_exception(first_error);
  std::vector<InstanceResult> results;
  results.reserve(slots.size());
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AggregateReport {
  std::size_t instances = 0;
  std::size_t failed_instances = 0;
  double sample_noc_mean = 0.0;
  double sample_noc_std = 0.0;
  double base_noc = 0.0;
  std::optional<double> delta_sb;
  std::optional<double> delta_gr;
  std::optional<double> delta_hh;
  double nof = 0.0;       // mean over sample slots of the non-converged count
  std::size_t base_nof = 0;
  double iou_auc = 0.0;
  double base_iou_auc = 0.0;
  std::optional<double> nsr_at_1;
  std::optional<double> nsr_at_max;
  std::vector<double> group_noc;        // mean NoC per sample slot
  std::vector<double> base_curve;       // mean IoU after click k
  std::vector<double> sample_curve;     // mean IoU after click k over all samples
};

namespace detail {

inline std::optional<double> percent_change(double value, double reference) {
  if (reference == 0.0) return std::nullopt;
  return 100.0 * (value - reference) / reference;
}

inline std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (!v) continue;
    total += *v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

inline double half_mean(const std::vector<double>& per_group, bool first) {
  const std::size_t half = per_group.size() / 2;
  const std::size_t lo = first ? 0 : half;
  const std::size_t hi = first ? half : per_group.size();
  double total = 0.0;
  for (std::size_t i = lo; i < hi; ++i) total += per_group[i];
  return total / static_cast<double>(hi - lo);
}

// NSR of one instance at a click index: 100 * std / mean of the sample IoUs;
// undefined when the mean IoU is zero.
inline std::optional<double> instance_nsr(const InstanceResult& r, std::size_t k) {
  if (r.samples.empty()) return std::nullopt;
  std::vector<double> v;
  for (const auto& t : r.samples) v.push_back(t.ious.at(k));
  const double m = mean_of(v);
  if (m == 0.0) return std::nullopt;
  return 100.0 * population_std(v) / m;
}

}  // namespace detail

/// Folds instance results into dataset statistics. Always single-threaded
/// and in instance order.
inline AggregateReport aggregate(std::span<const InstanceResult> results, const EvalConfig& config) {
  if (results.empty()) fail(ErrorKind::kInvalidParameter, "no instance results to aggregate");
  AggregateReport a;
  a.instances = results.size();
  const double n = static_cast<double>(results.size());
  const std::size_t slots = results.front().samples.size();
  for (const auto& r : results) {
    if (r.samples.size() != slots) fail(ErrorKind::kInvalidParameter, "instances have different sample counts");
  }
  const std::size_t rounds = static_cast<std::size_t>(config.max_clicks);

  std::vector<double> sample_means, sample_stds, base_nocs;
  a.group_noc.assign(slots, 0.0);
  a.base_curve.assign(rounds, 0.0);
  a.sample_curve.assign(rounds, 0.0);
  std::vector<double> slot_nof(slots, 0.0);
  double auc_total = 0.0, base_auc_total = 0.0;
  for (const auto& r : results) {
    if (r.failed()) ++a.failed_instances;
    sample_means.push_back(r.sample_mean_noc);
    sample_stds.push_back(r.sample_std_noc);
    base_nocs.push_back(r.baseline.noc);
    if (!r.baseline.converged) ++a.base_nof;
    base_auc_total += iou_auc(r.baseline.ious);
    for (std::size_t k = 0; k < rounds; ++k) a.base_curve[k] += r.baseline.ious.at(k);
    if (slots == 0) {
      auc_total += iou_auc(r.baseline.ious);
      continue;
    }
    double inst_auc = 0.0;
    for (std::size_t g = 0; g < slots; ++g) {
      const auto& t = r.samples[g];
      a.group_noc[g] += t.noc;
      if (!t.converged) slot_nof[g] += 1.0;
      inst_auc += iou_auc(t.ious);
      for (std::size_t k = 0; k < rounds; ++k) a.sample_curve[k] += t.ious.at(k);
    }
    auc_total += inst_auc / static_cast<double>(slots);
  }
  for (auto& v : a.group_noc) v /= n;
  for (auto& v : a.base_curve) v /= n;
  for (std::size_t k = 0; k < rounds; ++k) {
    a.sample_curve[k] = slots == 0 ? a.base_curve[k] : a.sample_curve[k] / (n * static_cast<double>(slots));
  }

  a.sample_noc_mean = detail::mean_of(sample_means);
  a.sample_noc_std = config.sample_std_mode == SampleStdMode::kMeanOfGroupStd ? detail::mean_of(sample_stds)
                                                                                : detail::population_std(sample_means);
  a.base_noc = detail::mean_of(base_nocs);
  a.base_iou_auc = base_auc_total / n;
  a.iou_auc = auc_total / n;
  a.nof = slots == 0 ? static_cast<double>(a.base_nof) : detail::mean_of(slot_nof);

  const bool groups = config.strategy == Strategy::kGroups && slots >= 2;
  if (config.delta_mode == DeltaMode::kRatioOfMeans) {
    a.delta_sb = detail::percent_change(a.sample_noc_mean, a.base_noc);
    if (groups) {
      a.delta_gr = detail::percent_change(a.group_noc.front(), a.group_noc.back());
      a.delta_hh = detail::percent_change(detail::half_mean(a.group_noc, true), detail::half_mean(a.group_noc, false));
    }
  } else {
    std::vector<std::optional<double>> sb, gr, hh;
    for (const auto& r : results) {
      sb.push_back(detail::percent_change(r.sample_mean_noc, r.baseline.noc));
      if (!groups) continue;
      std::vector<double> g;
      for (const auto& t : r.samples) g.push_back(t.noc);
      gr.push_back(detail::percent_change(g.front(), g.back()));
      hh.push_back(detail::percent_change(detail::half_mean(g, true), detail::half_mean(g, false)));
    }
    a.delta_sb = detail::mean_defined(sb);
    if (groups) {
      a.delta_gr = detail::mean_defined(gr);
      a.delta_hh = detail::mean_defined(hh);
    }
  }

  std::vector<std::optional<double>> first, last;
  for (const auto& r : results) {
    first.push_back(detail::instance_nsr(r, 0));
    last.push_back(detail::instance_nsr(r, rounds - 1));
  }
  a.nsr_at_1 = detail::mean_defined(first);
  a.nsr_at_max = detail::mean_defined(last);
  return a;
}

// ---------------------------------------------------------------------------
// Correlations between metric columns
// ---------------------------------------------------------------------------

struct Correlation {
  std::optional<double> pearson;
  std::optional<double> spearman;
};

inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) fail(ErrorKind::kInvalidParameter, "columns must have equal length >= 2");
  const double ma = detail::mean_of(a), mb = detail::mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

/// Ranks starting at 1, ties share the average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

/// `table[row][column]`, rows are methods. Result is columns x columns.
inline std::vector<std::vector<Correlation>> correlation_report(const std::vector<std::vector<double>>& table) {
  if (table.size() < 3) fail(ErrorKind::kInvalidParameter, "correlation report needs at least 3 rows");
  const std::size_t cols = table.front().size();
  for (const auto& row : table) {
    if (row.size() != cols) fail(ErrorKind::kInvalidParameter, "table rows differ in length");
  }
  std::vector<std::vector<double>> columns(cols);
  for (const auto& row : table)
    for (std::size_t c = 0; c < cols; ++c) columns[c].push_back(row[c]);
  std::vector<std::vector<Correlation>> out(cols, std::vector<Correlation>(cols));
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i][j] = {pearson(columns[i], columns[j]), spearman(columns[i], columns[j])};
  return out;
}

// ---------------------------------------------------------------------------
// First-click robustness with real clicks
// ---------------------------------------------------------------------------

struct FirstClickStats {
  std::string id;
  std::size_t clicks = 0;
  std::size_t failed = 0;
  double mean_iou = 0.0;
  double std_iou = 0.0;
  std::optional<double> nsr;  // 100 * std / mean, undefined for mean 0
};

/// Runs the segmenter once per real first-round click and summarizes the
/// spread of the resulting IoUs. A failed call scores IoU 0.
inline FirstClickStats first_click_eval(Segmenter& segmenter, const Instance& inst,
                                        std::span<const Click> real_clicks) {
  if (real_clicks.empty()) fail(ErrorKind::kInsufficientSample, "instance " + inst.id + " has no real clicks");
  FirstClickStats s;
  s.id = inst.id;
  s.clicks = real_clicks.size();
  std::vector<double> ious;
  for (std::size_t k = 0; k < real_clicks.size(); ++k) {
    Click c = real_clicks[k];
    c.round = 1;
    SegmentRequest req;
    req.id = inst.id + "/real" + std::to_string(k + 1);
    req.image = inst.image;
    req.width = inst.gt.width();
    req.height = inst.gt.height();
    req.clicks = std::span<const Click>(&c, 1);
    req.prev_mask = inst.initial ? &*inst.initial : nullptr;
    req.gt = &inst.gt;
    try {
      const auto pred = segmenter.predict(req);
      ious.push_back(iou(pred, inst.gt));
    } catch (const Error&) {
      ++s.failed;
      ious.push_back(0.0);
    }
  }
  s.mean_iou = detail::mean_of(ious);
  s.std_iou = detail::population_std(ious);
  if (s.mean_iou > 0.0) s.nsr = 100.0 * s.std_iou / s.mean_iou;
  return s;
}

}  // namespace rclicks
