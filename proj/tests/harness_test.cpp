#include <gtest/gtest.h>

#include <random>

#include "rclicks/harness.hpp"

using namespace rclicks;

namespace {

BinaryMask disk(int w, int h, int cx, int cy, int r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
  return m;
}

Instance disk_instance(const std::string& id, int w, int h, int cx, int cy, int r) {
  return Instance{id, "unused.png", disk(w, h, cx, cy, r), std::nullopt, std::nullopt};
}

std::vector<Instance> synthetic_instances(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rad(4, 10), off(-4, 4);
  std::vector<Instance> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(disk_instance("inst" + std::to_string(i), 40, 36, 20 + off(rng), 18 + off(rng), rad(rng)));
  }
  return out;
}

/// Trajectory that first reaches a 0.9 threshold at click `noc` (or never
/// when noc equals the cap and `converged` is false).
Trajectory trajectory_with_noc(int noc_value, int cap, bool converged = true) {
  Trajectory t;
  for (int k = 1; k <= cap; ++k) t.ious.push_back(k >= noc_value && converged ? 0.95 : 0.5);
  t.noc = noc(t.ious, 0.9, cap);
  t.converged = converged;
  return t;
}

class ConstantSegmenter final : public Segmenter {
 public:
  explicit ConstantSegmenter(BinaryMask m) : mask_(std::move(m)) {}
  BinaryMask predict(const SegmentRequest&) override { return mask_; }

 private:
  BinaryMask mask_;
};

class ThrowingSegmenter final : public Segmenter {
 public:
  BinaryMask predict(const SegmentRequest&) override { fail(ErrorKind::kAdapterError, "boom"); }
};

}  // namespace

TEST(DiskSegmenter, PixelCountMatchesRasterization) {
  const std::vector<Click> clicks{{20, 20}};
  const auto m = disk_mask(clicks, 41, 41, 12);
  std::size_t count = 0;
  for (int dy = -12; dy <= 12; ++dy)
    for (int dx = -12; dx <= 12; ++dx) count += dx * dx + dy * dy <= 144;
  EXPECT_EQ(m.count(), count);
  EXPECT_GE(m.count(), 441u);
}

TEST(DiskSegmenter, NegativeOverridesAndDisjointDisks) {
  const std::vector<Click> cancel{{5, 5, Polarity::kPositive}, {5, 5, Polarity::kNegative}};
  EXPECT_FALSE(disk_mask(cancel, 11, 11, 3).any());
  const std::vector<Click> far{{5, 5}, {40, 5}};
  EXPECT_EQ(connected_components(disk_mask(far, 50, 12, 3)).count(), 2);
}

TEST(Trajectory, NocAndAuc) {
  const std::vector<double> ones(20, 1.0), zeros(20, 0.0);
  EXPECT_EQ(noc(ones, 0.9, 20), 1);
  EXPECT_DOUBLE_EQ(iou_auc(ones), 100.0);
  EXPECT_EQ(noc(zeros, 0.9, 20), 20);
  EXPECT_DOUBLE_EQ(iou_auc(zeros), 0.0);
  std::vector<double> ramp;
  for (int k = 1; k <= 20; ++k) ramp.push_back(0.05 * k);
  EXPECT_NEAR(iou_auc(ramp), 52.5, 1e-12);
}

TEST(Trajectory, NocMonotoneInThreshold) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> ious(20);
    for (auto& v : ious) v = u(rng);
    int previous = 21;
    for (double thr = 1.0; thr > 0.0; thr -= 0.05) {
      const int n = noc(ious, thr, 20);
      EXPECT_LE(n, previous);
      previous = n;
    }
  }
}

TEST(RunInstance, OracleSegmenterConvergesAtOnce) {
  OracleSegmenter seg;
  const auto inst = disk_instance("a", 30, 30, 15, 15, 6);
  const auto t = run_instance(seg, inst, EvalConfig{}, baseline_picker(), "a");
  EXPECT_EQ(t.noc, 1);
  EXPECT_TRUE(t.converged);
  for (double v : t.ious) EXPECT_EQ(v, 1.0);
}

TEST(RunInstance, EmptySegmenterNeverConverges) {
  EmptySegmenter seg;
  const auto inst = disk_instance("a", 30, 30, 15, 15, 6);
  const auto t = run_instance(seg, inst, EvalConfig{}, baseline_picker(), "a");
  EXPECT_EQ(t.noc, 20);
  EXPECT_FALSE(t.converged);
  EXPECT_EQ(t.ious.size(), 20u);
  EXPECT_EQ(t.clicks.size(), 20u);
}

TEST(RunInstance, DiskFixtureNeedsOneClick) {
  DiskSegmenter seg(12);
  const auto inst = disk_instance("disk", 41, 41, 20, 20, 12);
  const auto t = run_instance(seg, inst, EvalConfig{}, baseline_picker(), "disk");
  ASSERT_EQ(t.clicks.size(), 1u);
  EXPECT_EQ(t.clicks[0].x, 20);
  EXPECT_EQ(t.clicks[0].y, 20);
  EXPECT_EQ(t.noc, 1);
  EXPECT_EQ(t.ious[0], 1.0);
}

TEST(RunInstance, AdapterFailureMarksTrajectory) {
  ThrowingSegmenter seg;
  const auto inst = disk_instance("a", 30, 30, 15, 15, 6);
  const auto t = run_instance(seg, inst, EvalConfig{}, baseline_picker(), "a");
  EXPECT_TRUE(t.failed);
  EXPECT_FALSE(t.converged);
  EXPECT_EQ(t.noc, 20);
}

TEST(RunInstance, SampledClicksStayInSoftSupport) {
  // A segmenter that always predicts the same partial mask keeps the error
  // fixed, so every click must land near the chosen error component.
  const auto gt = disk(50, 50, 25, 25, 15);
  const auto partial = disk(50, 50, 20, 25, 10);
  ConstantSegmenter seg(partial);
  Instance inst{"s", "x.png", gt, partial, std::nullopt};
  EvalConfig cfg;
  for (auto model : {ClickModel::kDistanceTransform, ClickModel::kUniform}) {
    cfg.click_model = model;
    for (int g = 1; g <= cfg.n_groups; ++g) {
      const auto t = run_instance(seg, inst, cfg, group_picker(inst, cfg, g), "s");
      const auto target = largest_error_region(partial, gt);
      for (const auto& c : t.clicks) {
        EXPECT_TRUE(target.region(c.x, c.y));
        EXPECT_EQ(c.polarity, Polarity::kPositive);
      }
    }
  }
}

TEST(RunInstance, PriorMapConditionedOnError) {
  const auto gt = disk(40, 40, 20, 20, 10);
  std::vector<double> w(1600, 1.0);
  Instance inst{"p", "x.png", gt, std::nullopt, ProbabilityMap::from_weights(40, 40, w)};
  EmptySegmenter seg;
  EvalConfig cfg;
  cfg.max_clicks = 5;
  const auto soft = soft_error_mask(gt);
  for (int g = 1; g <= 10; ++g) {
    const auto t = run_instance(seg, inst, cfg, group_picker(inst, cfg, g), "p");
    for (const auto& c : t.clicks) EXPECT_GT(soft.values(c.x, c.y), 0.0);
  }
}

TEST(Evaluate, OracleCollapse) {
  const auto instances = synthetic_instances(20, 1);
  EvalConfig cfg;
  const auto results = run_dataset(instances, [] { return std::make_unique<OracleSegmenter>(); }, cfg, 2);
  const auto a = aggregate(results, cfg);
  EXPECT_EQ(a.sample_noc_mean, 1.0);
  EXPECT_EQ(a.base_noc, 1.0);
  EXPECT_EQ(a.nof, 0.0);
  EXPECT_EQ(a.iou_auc, 100.0);
  EXPECT_EQ(a.delta_sb, 0.0);
  EXPECT_EQ(a.delta_gr, 0.0);
  EXPECT_EQ(a.delta_hh, 0.0);
  EXPECT_EQ(a.nsr_at_1, 0.0);
  EXPECT_EQ(a.nsr_at_max, 0.0);
}

TEST(Evaluate, DeterministicAcrossWorkers) {
  const auto instances = synthetic_instances(6, 2);
  EvalConfig cfg;
  cfg.master_seed = 77;
  cfg.max_clicks = 8;
  auto factory = [] { return std::make_unique<DiskSegmenter>(5); };
  const auto one = run_dataset(instances, factory, cfg, 1);
  const auto three = run_dataset(instances, factory, cfg, 3);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    ASSERT_EQ(one[i].samples.size(), three[i].samples.size());
    for (std::size_t g = 0; g < one[i].samples.size(); ++g) {
      EXPECT_EQ(one[i].samples[g].clicks, three[i].samples[g].clicks);
      EXPECT_EQ(one[i].samples[g].ious, three[i].samples[g].ious);
    }
  }
}

TEST(Evaluate, SampleMeanWithinGroupRange) {
  const auto instances = synthetic_instances(5, 3);
  EvalConfig cfg;
  cfg.master_seed = 5;
  const auto results = run_dataset(instances, [] { return std::make_unique<DiskSegmenter>(4); }, cfg, 1);
  for (const auto& r : results) {
    ASSERT_EQ(r.samples.size(), 10u);
    int lo = 100, hi = 0;
    for (const auto& t : r.samples) {
      lo = std::min(lo, t.noc);
      hi = std::max(hi, t.noc);
    }
    EXPECT_GE(r.sample_mean_noc, lo);
    EXPECT_LE(r.sample_mean_noc, hi);
  }
  const auto a = aggregate(results, cfg);
  ASSERT_TRUE(a.delta_gr);
  EXPECT_NEAR(*a.delta_gr, 100.0 * (a.group_noc.front() - a.group_noc.back()) / a.group_noc.back(), 1e-12);
}

TEST(Evaluate, FullMapAndBaselineStrategies) {
  const auto instances = synthetic_instances(3, 4);
  EvalConfig cfg;
  cfg.strategy = Strategy::kFullMap;
  const auto full = aggregate(run_dataset(instances, [] { return std::make_unique<DiskSegmenter>(4); }, cfg), cfg);
  EXPECT_FALSE(full.delta_gr);
  EXPECT_TRUE(full.delta_sb);
  cfg.strategy = Strategy::kBaseline;
  const auto base = aggregate(run_dataset(instances, [] { return std::make_unique<DiskSegmenter>(4); }, cfg), cfg);
  EXPECT_EQ(base.sample_noc_mean, base.base_noc);
  EXPECT_EQ(base.delta_sb, 0.0);
  EXPECT_FALSE(base.nsr_at_1);
}

TEST(Evaluate, FailuresCountedNotFatal) {
  const auto instances = synthetic_instances(3, 5);
  EvalConfig cfg;
  const auto results = run_dataset(instances, [] { return std::make_unique<ThrowingSegmenter>(); }, cfg, 2);
  const auto a = aggregate(results, cfg);
  EXPECT_EQ(a.failed_instances, 3u);
  EXPECT_EQ(a.base_nof, 3u);
  EXPECT_EQ(a.nof, 3.0);
  EXPECT_EQ(a.iou_auc, 0.0);
  EXPECT_FALSE(a.nsr_at_1);  // mean IoU 0 everywhere
}

TEST(Aggregate, IdenticalTrajectoriesGiveZeroDeltas) {
  std::vector<InstanceResult> results(4);
  EvalConfig cfg;
  for (auto& r : results) {
    r.baseline = trajectory_with_noc(6, 20);
    for (int g = 0; g < 10; ++g) r.samples.push_back(trajectory_with_noc(6, 20));
    summarize_samples(r);
  }
  const auto a = aggregate(results, cfg);
  EXPECT_EQ(a.sample_noc_std, 0.0);
  EXPECT_EQ(a.delta_sb, 0.0);
  EXPECT_EQ(a.delta_gr, 0.0);
  EXPECT_EQ(a.delta_hh, 0.0);
  EXPECT_EQ(a.nsr_at_1, 0.0);
}

TEST(Aggregate, TwoGroupToy) {
  std::vector<InstanceResult> results(1);
  EvalConfig cfg;
  cfg.n_groups = 2;
  results[0].baseline = trajectory_with_noc(5, 20);
  results[0].samples = {trajectory_with_noc(8, 20), trajectory_with_noc(5, 20)};
  summarize_samples(results[0]);
  const auto a = aggregate(results, cfg);
  EXPECT_DOUBLE_EQ(*a.delta_gr, 60.0);
}

TEST(Aggregate, ZeroDenominatorIsNull) {
  EXPECT_FALSE(detail::percent_change(3.0, 0.0));
}

TEST(Aggregate, RatioModesDiffer) {
  // Two instances: base 2 / sample 4 and base 10 / sample 10.
  std::vector<InstanceResult> results(2);
  EvalConfig cfg;
  cfg.n_groups = 2;
  results[0].baseline = trajectory_with_noc(2, 20);
  results[0].samples = {trajectory_with_noc(4, 20), trajectory_with_noc(4, 20)};
  results[1].baseline = trajectory_with_noc(10, 20);
  results[1].samples = {trajectory_with_noc(10, 20), trajectory_with_noc(10, 20)};
  for (auto& r : results) summarize_samples(r);
  EXPECT_NEAR(*aggregate(results, cfg).delta_sb, 100.0 * (7.0 - 6.0) / 6.0, 1e-12);
  cfg.delta_mode = DeltaMode::kMeanOfRatios;
  EXPECT_NEAR(*aggregate(results, cfg).delta_sb, 50.0, 1e-12);
}

TEST(Aggregate, SampleStdModes) {
  std::vector<InstanceResult> results(2);
  EvalConfig cfg;
  cfg.n_groups = 2;
  results[0].baseline = trajectory_with_noc(2, 20);
  results[0].samples = {trajectory_with_noc(2, 20), trajectory_with_noc(4, 20)};
  results[1].baseline = trajectory_with_noc(2, 20);
  results[1].samples = {trajectory_with_noc(6, 20), trajectory_with_noc(6, 20)};
  for (auto& r : results) summarize_samples(r);
  EXPECT_DOUBLE_EQ(aggregate(results, cfg).sample_noc_std, 0.5);
  cfg.sample_std_mode = SampleStdMode::kStdOfMeans;
  EXPECT_DOUBLE_EQ(aggregate(results, cfg).sample_noc_std, 1.5);
}

TEST(Correlation, SelfNegationAndConstant) {
  std::vector<std::vector<double>> table{{1, -1, 4, 2}, {2, -2, 4, 9}, {5, -5, 4, 1}, {3, -3, 4, 7}};
  const auto c = correlation_report(table);
  EXPECT_NEAR(*c[0][0].pearson, 1.0, 1e-15);
  EXPECT_NEAR(*c[0][0].spearman, 1.0, 1e-15);
  EXPECT_NEAR(*c[0][1].pearson, -1.0, 1e-15);
  EXPECT_NEAR(*c[0][1].spearman, -1.0, 1e-15);
  EXPECT_FALSE(c[0][2].pearson);
  EXPECT_FALSE(c[2][3].spearman);
  EXPECT_THROW(correlation_report({{1.0}, {2.0}}), Error);
}

TEST(Correlation, MatchesDirectFormulas) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 6);  // small range forces ties
  std::vector<std::vector<double>> table(10, std::vector<double>(3));
  for (auto& row : table)
    for (auto& v : row) v = u(rng);
  const auto c = correlation_report(table);
  auto column = [&](int j) {
    std::vector<double> v;
    for (const auto& row : table) v.push_back(row[j]);
    return v;
  };
  // Rank by counting: rank = 1 + #less + (#equal - 1) / 2.
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r;
    for (double x : v) {
      double less = 0, equal = 0;
      for (double y : v) {
        less += y < x;
        equal += y == x;
      }
      r.push_back(1 + less + (equal - 1) / 2);
    }
    return r;
  };
  auto cov_corr = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double n = a.size();
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sa += a[i];
      sb += b[i];
      sab += a[i] * b[i];
      saa += a[i] * a[i];
      sbb += b[i] * b[i];
    }
    return (sab - sa * sb / n) / std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
  };
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(*c[i][j].pearson, cov_corr(column(i), column(j)), 1e-12);
      EXPECT_NEAR(*c[i][j].spearman, cov_corr(ranks(column(i)), ranks(column(j))), 1e-12);
    }
  }
}

TEST(FirstClick, IgnoringSegmenterHasZeroSpread) {
  const auto inst = disk_instance("f", 30, 30, 15, 15, 8);
  ConstantSegmenter seg(disk(30, 30, 14, 15, 8));
  const std::vector<Click> clicks{{10, 10}, {15, 15}, {20, 12}};
  const auto s = first_click_eval(seg, inst, clicks);
  EXPECT_EQ(s.std_iou, 0.0);
  EXPECT_EQ(s.nsr, 0.0);
}

TEST(FirstClick, HandArithmetic) {
  // IoU 0.8 from a 4-of-5 overlap, 0.6 from 3-of-5.
  BinaryMask gt(5, 1, {1, 1, 1, 1, 1});
  class ByPosition final : public Segmenter {
   public:
    BinaryMask predict(const SegmentRequest& r) override {
      BinaryMask m(5, 1);
      for (int x = 0; x < (r.clicks[0].x == 0 ? 4 : 3); ++x) m.set(x, 0);
      return m;
    }
  } seg;
  const Instance inst{"h", "x.png", gt, std::nullopt, std::nullopt};
  const std::vector<Click> clicks{{0, 0}, {1, 0}};
  const auto s = first_click_eval(seg, inst, clicks);
  EXPECT_NEAR(s.mean_iou, 0.7, 1e-12);
  EXPECT_NEAR(s.std_iou, 0.1, 1e-12);
  EXPECT_NEAR(*s.nsr, 100.0 * 0.1 / 0.7, 1e-10);
}

TEST(Config, Validation) {
  EvalConfig cfg;
  cfg.max_clicks = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.iou_threshold = 1.2;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(parse_strategy("full"), Strategy::kFullMap);
  EXPECT_THROW(parse_strategy("random"), Error);
}
