#pragma once

// Comparison metrics between click sets (PL1, Wasserstein, 2D two-sample
// Kolmogorov-Smirnov) and between a clickability map and observed clicks
// (NSS, PDE).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rclicks/error.hpp"
#include "rclicks/imaging.hpp"
#include "rclicks/probability_map.hpp"
#include "rclicks/rng.hpp"
#include "rclicks/transport.hpp"

namespace rclicks {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Object bounding box used to normalize click coordinates.
struct Frame {
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 1.0;
  double height = 1.0;

  static Frame from_box(const Box& box) { return {double(box.x0), double(box.y0), double(box.width), double(box.height)}; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ClickSet {
  std::vector<Point2> points;
  Frame frame;

  Point2 normalized(std::size_t i) const {
    return {(points[i].x - frame.x0) / frame.width, (points[i].y - frame.y0) / frame.height};
  }
};

namespace detail {

inline void require_comparable(const ClickSet& a, const ClickSet& b) {
  if (a.points.empty() || b.points.empty()) fail(ErrorKind::kInvalidParameter, "click set is empty");
  if (!(a.frame == b.frame)) fail(ErrorKind::kInvalidParameter, "click sets use different frames");
  if (a.frame.width < 1.0 || a.frame.height < 1.0) {
    fail(ErrorKind::kInvalidParameter, "frame width and height must be at least 1");
  }
}

}  // namespace detail

/// Mean over all cross pairs of the frame-normalized L1 distance.
inline double pl1(const ClickSet& a, const ClickSet& b) {
  detail::require_comparable(a, b);
  double total = 0.0;
  for (const auto& p : a.points) {
    for (const auto& q : b.points) {
      total += std::abs(p.x - q.x) / a.frame.width + std::abs(p.y - q.y) / a.frame.height;
    }
  }
  return total / (static_cast<double>(a.points.size()) * static_cast<double>(b.points.size()));
}

/// Exact 1-Wasserstein distance between the uniform empirical distributions
/// of two click sets, Euclidean ground cost in normalized coordinates.
inline double wasserstein2d(const ClickSet& a, const ClickSet& b) {
  detail::require_comparable(a, b);
  const std::size_t n = a.points.size();
  const std::size_t m = b.points.size();
  const auto g = std::gcd(n, m);
  // Uniform weights 1/n and 1/m scaled to integers: each a-point ships m/g
  // units, each b-point receives n/g.
  const std::vector<std::int64_t> supply(n, static_cast<std::int64_t>(m / g));
  const std::vector<std::int64_t> demand(m, static_cast<std::int64_t>(n / g));
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = a.normalized(i);
    for (std::size_t j = 0; j < m; ++j) {
      const auto q = b.normalized(j);
      cost[i * m + j] = std::hypot(p.x - q.x, p.y - q.y);
    }
  }
  const auto plan = solve_transport(supply, demand, cost);
  return plan.cost / static_cast<double>(n * (m / g));
}

// ---------------------------------------------------------------------------
// Two-dimensional two-sample Kolmogorov-Smirnov (Fasano-Franceschini)
// ---------------------------------------------------------------------------

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass = true;  // p_value > 0.05: samples not significantly different
};

inline constexpr double kKsAlpha = 0.05;

namespace detail {

// Fractions of `pts` in the four quadrants around (x0, y0): upper-right,
// upper-left, lower-left, lower-right. A point on an axis falls to the left
// or below.
inline std::array<double, 4> quadrant_fractions(double x0, double y0, std::span<const Point2> pts) {
  std::array<std::size_t, 4> counts{};
  for (const auto& p : pts) {
    if (p.y > y0) {
      ++counts[p.x > x0 ? 0 : 1];
    } else {
      ++counts[p.x > x0 ? 3 : 2];
    }
  }
  const double n = static_cast<double>(pts.size());
  return {counts[0] / n, counts[1] / n, counts[2] / n, counts[3] / n};
}

inline double max_quadrant_gap(std::span<const Point2> anchors, std::span<const Point2> a,
                               std::span<const Point2> b) {
  double d = 0.0;
  for (const auto& o : anchors) {
    const auto fa = quadrant_fractions(o.x, o.y, a);
    const auto fb = quadrant_fractions(o.x, o.y, b);
    for (int q = 0; q < 4; ++q) d = std::max(d, std::abs(fa[q] - fb[q]));
  }
  return d;
}

inline double pearson_xy(std::span<const Point2> pts) {
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    sxy += (p.x - mx) * (p.y - my);
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

/// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
inline double kolmogorov_tail(double lambda) {
  const double a2 = -2.0 * lambda * lambda;
  double fac = 2.0, sum = 0.0, previous = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = fac * std::exp(a2 * j * j);
    sum += term;
    if (std::abs(term) <= 1e-3 * previous || std::abs(term) <= 1e-8 * sum) {
      return std::clamp(sum, 0.0, 1.0);
    }
    fac = -fac;
    previous = std::abs(term);
  }
  return 1.0;  // series does not converge for tiny lambda
}

/// Statistic only: the largest quadrant-fraction gap, averaged over anchoring
/// at the points of each sample.
inline double ks2d_statistic(std::span<const Point2> a, std::span<const Point2> b) {
  const double d1 = detail::max_quadrant_gap(a, a, b);
  const double d2 = detail::max_quadrant_gap(b, a, b);
  return 0.5 * (d1 + d2);
}

inline KsResult ks2d(const ClickSet& a, const ClickSet& b) {
  if (a.points.size() < 3 || b.points.size() < 3) {
    fail(ErrorKind::kInsufficientSample, "2D KS test needs at least 3 points per sample");
  }
  KsResult r;
  r.statistic = ks2d_statistic(a.points, b.points);
  const double n1 = static_cast<double>(a.points.size());
  const double n2 = static_cast<double>(b.points.size());
  const double sqen = std::sqrt(n1 * n2 / (n1 + n2));
  const double r1 = detail::pearson_xy(a.points);
  const double r2 = detail::pearson_xy(b.points);
  const double rr = std::sqrt(1.0 - 0.5 * (r1 * r1 + r2 * r2));
  r.p_value = kolmogorov_tail(r.statistic * sqen / (1.0 + rr * (0.25 - 0.75 / sqen)));
  r.pass = r.p_value > kKsAlpha;
  return r;
}

/// Permutation p-value for small samples: the pooled points are reshuffled
/// `permutations` times and the observed statistic ranked among the results.
inline KsResult ks2d_permutation(const ClickSet& a, const ClickSet& b, int permutations, Rng& rng) {
  if (a.points.size() < 3 || b.points.size() < 3) {
    fail(ErrorKind::kInsufficientSample, "2D KS test needs at least 3 points per sample");
  }
  if (permutations < 1) fail(ErrorKind::kInvalidParameter, "permutations must be positive");
  KsResult r;
  r.statistic = ks2d_statistic(a.points, b.points);
  std::vector<Point2> pooled(a.points);
  pooled.insert(pooled.end(), b.points.begin(), b.points.end());
  const std::size_t n1 = a.points.size();
  int at_least = 0;
  for (int k = 0; k < permutations; ++k) {
    for (std::size_t i = pooled.size() - 1; i > 0; --i) {
      std::swap(pooled[i], pooled[uniform_index(rng, i + 1)]);
    }
    const std::span<const Point2> all(pooled);
    if (ks2d_statistic(all.first(n1), all.subspan(n1)) >= r.statistic) ++at_least;
  }
  r.p_value = (1.0 + at_least) / (1.0 + permutations);
  r.pass = r.p_value > kKsAlpha;
  return r;
}

// ---------------------------------------------------------------------------
// Map-vs-clicks metrics
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t pixel_index(const ProbabilityMap& map, const Point2& p) {
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (fx < 0 || fy < 0 || fx >= map.width() || fy >= map.height()) {
    fail(ErrorKind::kInvalidParameter, "click (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                                           ") outside the map");
  }
  return static_cast<std::size_t>(fy) * map.width() + static_cast<std::size_t>(fx);
}

}  // namespace detail

/// Normalized scanpath saliency: mean z-scored map value at the clicks, with
/// statistics over all pixels. A constant map scores 0.
inline double nss(const ProbabilityMap& map, std::span<const Point2> clicks) {
  if (clicks.empty()) fail(ErrorKind::kInvalidParameter, "no clicks given");
  std::vector<std::size_t> idx;
  idx.reserve(clicks.size());
  for (const auto& c : clicks) idx.push_back(detail::pixel_index(map, c));
  const double n = static_cast<double>(map.size());
  double mean = 0.0;
  for (double p : map.probs()) mean += p;
  mean /= n;
  double var = 0.0;
  for (double p : map.probs()) var += (p - mean) * (p - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t i : idx) total += (map[i] - mean) / sd;
  return total / static_cast<double>(idx.size());
}

/// Mean per-pixel probability at the clicks.
inline double pde(const ProbabilityMap& map, std::span<const Point2> clicks) {
  if (clicks.empty()) fail(ErrorKind::kInvalidParameter, "no clicks given");
  double total = 0.0;
  for (const auto& c : clicks) total += map[detail::pixel_index(map, c)];
  return total / static_cast<double>(clicks.size());
}

inline double nss(const ProbabilityMap& map, const ClickSet& clicks) { return nss(map, clicks.points); }
inline double pde(const ProbabilityMap& map, const ClickSet& clicks) { return pde(map, clicks.points); }

// ---------------------------------------------------------------------------
// Model-vs-real comparison by bootstrapping clicks from a map
// ---------------------------------------------------------------------------

/// `n` independent pixel draws from `map`, returned as pixel coordinates.
inline std::vector<Point2> sample_map_points(const ProbabilityMap& map, std::size_t n, Rng& rng) {
  std::vector<double> cumulative(map.size());
  std::partial_sum(map.probs().begin(), map.probs().end(), cumulative.begin());
  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto i = static_cast<std::size_t>(it - cumulative.begin());
    out.push_back({double(i % map.width()), double(i / map.width())});
  }
  return out;
}

struct BootstrapComparison {
  double pl1 = 0.0;
  double wd = 0.0;
  double ks_pass_rate = 0.0;  // over rounds where the KS test applies
};

inline constexpr int kBootstrapRounds = 100;

/// Compares real clicks with `rounds` samples of the same size drawn from the
/// model map, averaging each metric over the rounds.
inline BootstrapComparison bootstrap_compare(const ProbabilityMap& model, const ClickSet& real, Rng& rng,
                                             int rounds = kBootstrapRounds) {
  if (rounds < 1) fail(ErrorKind::kInvalidParameter, "bootstrap rounds must be positive");
  if (real.points.empty()) fail(ErrorKind::kInvalidParameter, "click set is empty");
  BootstrapComparison out;
  int ks_rounds = 0, ks_passed = 0;
  for (int r = 0; r < rounds; ++r) {
    const ClickSet sampled{sample_map_points(model, real.points.size(), rng), real.frame};
    out.pl1 += pl1(sampled, real);
    out.wd += wasserstein2d(sampled, real);
    if (real.points.size() >= 3) {
      ++ks_rounds;
      ks_passed += ks2d(sampled, real).pass ? 1 : 0;
    }
  }
  out.pl1 /= rounds;
  out.wd /= rounds;
  out.ks_pass_rate = ks_rounds ? double(ks_passed) / ks_rounds : 0.0;
  return out;
}

}  // namespace rclicks
