#pragma once

// Click generation: the baseline (center of largest error) strategy, the
// uniform and distance-transform click models, clickability maps built from
// observed clicks, decile clicking groups and weighted sampling.

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rclicks/click.hpp"
#include "rclicks/error.hpp"
#include "rclicks/imaging.hpp"
#include "rclicks/probability_map.hpp"
#include "rclicks/rng.hpp"

namespace rclicks {

inline constexpr double kDefaultDiagFraction = 0.01;
inline constexpr double kDefaultClickSigma = 5.0;
inline constexpr int kDefaultGroups = 10;

/// Click radius used by the collection UI: a fraction of the image diagonal.
inline double click_radius(int width, int height, double diag_fraction = kDefaultDiagFraction) {
  return diag_fraction * std::sqrt(static_cast<double>(width) * width + static_cast<double>(height) * height);
}

// ---------------------------------------------------------------------------
// Baseline strategy
// ---------------------------------------------------------------------------

/// The error component a click should correct, with the polarity that
/// corrects it (false negatives need positive clicks).
struct ErrorTarget {
  BinaryMask region;
  Polarity polarity;
};

/// Largest connected error component over both FN and FP masks. Ties go to
/// FN, then to the component whose first pixel comes first in raster order.
inline ErrorTarget largest_error_region(const BinaryMask& pred, const BinaryMask& gt,
                                        int connectivity = 8) {
  const auto errors = error_regions(pred, gt);
  const auto fn = connected_components(errors.false_negative, connectivity);
  const auto fp = connected_components(errors.false_positive, connectivity);

  const LabeledRegions* best_regions = nullptr;
  int best_id = 0;
  std::size_t best_size = 0;
  for (const auto* regions : {&fn, &fp}) {
    for (int id = 1; id <= regions->count(); ++id) {
      const std::size_t size = regions->region_size(id);
      // FN is scanned first and ids follow raster order of their seeds, so
      // only a strictly larger region replaces the current best.
      if (best_regions == nullptr || size > best_size) {
        best_regions = regions;
        best_id = id;
        best_size = size;
      }
    }
  }
  if (best_regions == nullptr) fail(ErrorKind::kNoErrorRegion, "prediction matches ground truth");
  return {best_regions->mask_of(best_id),
          best_regions == &fn ? Polarity::kPositive : Polarity::kNegative};
}

/// Pixel of `region` furthest from its boundary (lowest raster index on ties).
inline Click center_click(const ErrorTarget& target) {
  const auto dt = distance_transform(target.region);
  std::size_t best = 0;
  for (std::size_t i = 1; i < dt.size(); ++i)
    if (dt[i] > dt[best]) best = i;
  const int w = target.region.width();
  return Click{static_cast<int>(best % w), static_cast<int>(best / w), target.polarity, 1,
               Device::kSimulated};
}

inline Click baseline_click(const BinaryMask& pred, const BinaryMask& gt, int connectivity = 8) {
  return center_click(largest_error_region(pred, gt, connectivity));
}

// ---------------------------------------------------------------------------
// Clickability maps
// ---------------------------------------------------------------------------

struct SoftErrorMask {
  ScalarField values;  // in [0, 1]
  double click_radius;
};

inline SoftErrorMask soft_error_mask(const BinaryMask& error,
                                     double diag_fraction = kDefaultDiagFraction) {
  if (!error.any()) fail(ErrorKind::kNoErrorRegion, "error mask is empty");
  if (!(diag_fraction > 0.0)) fail(ErrorKind::kInvalidParameter, "diag_fraction must be positive");
  const double radius = click_radius(error.width(), error.height(), diag_fraction);
  ScalarField blurred = gaussian_blur(ScalarField::from_mask(error), radius);
  for (std::size_t i = 0; i < blurred.size(); ++i) blurred[i] = std::clamp(blurred[i], 0.0, 1.0);
  return {std::move(blurred), radius};
}

/// Ground-truth clickability map: click impulses, Gaussian smoothing with
/// `sigma`, multiplication by the soft error mask, normalization.
inline ProbabilityMap build_clickability_map(std::span<const Click> clicks, const SoftErrorMask& soft,
                                             double sigma = kDefaultClickSigma) {
  if (clicks.empty()) fail(ErrorKind::kInvalidParameter, "at least one click is required");
  const int w = soft.values.width();
  const int h = soft.values.height();
  ScalarField impulses(w, h);
  for (const auto& c : clicks) {
    if (c.x < 0 || c.y < 0 || c.x >= w || c.y >= h) {
      fail(ErrorKind::kInvalidParameter, "click (" + std::to_string(c.x) + "," +
                                             std::to_string(c.y) + ") outside the image");
    }
    impulses(c.x, c.y) += 1.0;
  }
  ScalarField smooth = gaussian_blur(impulses, sigma);
  double total = 0.0;
  std::vector<double> weights(smooth.size());
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    weights[i] = smooth[i] * soft.values[i];
    total += weights[i];
  }
  if (total < 1e-12) {
    fail(ErrorKind::kDegenerateMap, "clicks carry no mass inside the soft error mask");
  }
  for (double& v : weights) v /= total;
  return ProbabilityMap(w, h, std::move(weights));
}

inline ProbabilityMap build_clickability_map(std::span<const Click> clicks, const BinaryMask& error,
                                             double sigma = kDefaultClickSigma,
                                             double diag_fraction = kDefaultDiagFraction) {
  return build_clickability_map(clicks, soft_error_mask(error, diag_fraction), sigma);
}

/// Equal probability on every error pixel.
inline ProbabilityMap uniform_model(const BinaryMask& error) {
  const std::size_t n = error.count();
  if (n == 0) fail(ErrorKind::kNoErrorRegion, "error mask is empty");
  std::vector<double> probs(error.size(), 0.0);
  const double p = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < error.size(); ++i)
    if (error[i]) probs[i] = p;
  return ProbabilityMap::from_weights(error.width(), error.height(), std::move(probs));
}

/// Probability proportional to the distance from the error boundary.
inline ProbabilityMap dt_model(const BinaryMask& error) {
  if (!error.any()) fail(ErrorKind::kNoErrorRegion, "error mask is empty");
  return ProbabilityMap::from_field(distance_transform(error));
}

/// Restricts a prior map to the soft support of `error` and renormalizes.
/// When the prior has no mass there the uniform model over the error is used
/// and a warning is logged.
inline ProbabilityMap condition_on_error(const ProbabilityMap& prior, const BinaryMask& error,
                                         double diag_fraction = kDefaultDiagFraction) {
  if (prior.width() != error.width() || prior.height() != error.height()) {
    fail(ErrorKind::kInvalidParameter, "prior map and error mask differ in size");
  }
  const auto soft = soft_error_mask(error, diag_fraction);
  std::vector<double> weights(prior.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    weights[i] = prior[i] * soft.values[i];
    total += weights[i];
  }
  if (total < 1e-12) {
    std::clog << "rclicks: warning: clickability mass vanished on the error region, "
                 "falling back to the uniform model\n";
    return uniform_model(error);
  }
  return ProbabilityMap::from_weights(prior.width(), prior.height(), std::move(weights));
}

// ---------------------------------------------------------------------------
// Clicking groups
// ---------------------------------------------------------------------------

struct GroupMember {
  std::size_t index;  // raster index
  double weight;      // share of this pixel's mass inside the group
};

/// Equal-mass partition of a probability map. Pixels are ordered by
/// ascending probability and laid end to end on the cumulative mass axis;
/// group i owns the mass interval [(i-1)/n, i/n). A pixel straddling a
/// boundary contributes its overlap to each side, so group n holds the most
/// probable pixels.
class ClickingGroups {
 public:
  ClickingGroups(ProbabilityMap source, std::vector<std::vector<GroupMember>> members)
      : source_(std::move(source)), members_(std::move(members)) {
    cumulative_.resize(members_.size());
    for (std::size_t g = 0; g < members_.size(); ++g) {
      double acc = 0.0;
      cumulative_[g].reserve(members_[g].size());
      for (const auto& m : members_[g]) {
        acc += m.weight;
        cumulative_[g].push_back(acc);
      }
    }
  }

  int n_groups() const noexcept { return static_cast<int>(members_.size()); }
  const ProbabilityMap& source() const noexcept { return source_; }

  /// Members of group `i` (1-based).
  std::span<const GroupMember> group(int i) const { return members_.at(checked(i)); }

  double mass(int i) const {
    const auto& c = cumulative_.at(checked(i));
    return c.empty() ? 0.0 : c.back();
  }

  /// Weighted mean of member pixel probabilities. Clamped to the members'
  /// range so rounding cannot break the ordering between adjacent groups.
  double mean_probability(int i) const {
    double num = 0.0, den = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& m : group(i)) {
      const double p = source_[m.index];
      num += m.weight * p;
      den += m.weight;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    return den > 0.0 ? std::clamp(num / den, lo, hi) : 0.0;
  }

  /// Draws a member of group `i` with probability proportional to its weight.
  std::size_t draw(int i, Rng& rng) const {
    const auto& c = cumulative_.at(checked(i));
    const double u = uniform01(rng) * c.back();
    auto it = std::upper_bound(c.begin(), c.end(), u);
    if (it == c.end()) --it;
    return members_[checked(i)][static_cast<std::size_t>(it - c.begin())].index;
  }

 private:
  std::size_t checked(int i) const {
    if (i < 1 || i > n_groups()) {
      fail(ErrorKind::kInvalidParameter, "group index " + std::to_string(i) + " outside 1.." +
                                             std::to_string(n_groups()));
    }
    return static_cast<std::size_t>(i - 1);
  }

  ProbabilityMap source_;
  std::vector<std::vector<GroupMember>> members_;
  std::vector<std::vector<double>> cumulative_;
};

inline ClickingGroups partition_groups(const ProbabilityMap& map, int n_groups = kDefaultGroups) {
  if (n_groups < 1) fail(ErrorKind::kInvalidParameter, "n_groups must be at least 1");
  std::vector<std::size_t> order(map.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return map[a] < map[b]; });

  double total = 0.0;
  for (std::size_t idx : order) total += map[idx];
  std::vector<double> bounds(static_cast<std::size_t>(n_groups) + 1);
  for (int i = 0; i <= n_groups; ++i) bounds[i] = total * i / n_groups;
  bounds.back() = total;
  // Cumulative sums and boundaries disagree by rounding; anything within eps
  // of a boundary is treated as landing on it so no group gets a sliver.
  const double eps = 1e-12 * total;

  std::vector<std::vector<GroupMember>> members(static_cast<std::size_t>(n_groups));
  double start = 0.0;
  std::size_t g = 0;
  for (std::size_t idx : order) {
    const double p = map[idx];
    if (p <= 0.0) continue;
    double end = start + p;
    for (;;) {
      const bool last = g + 1 == members.size();
      const double upper = bounds[g + 1];
      const double lower = std::max(start, bounds[g]);
      if (!last && end > upper + eps) {
        if (upper - lower > eps) members[g].push_back({idx, upper - lower});
        ++g;
        continue;
      }
      if (end - lower > 0.0) members[g].push_back({idx, end - lower});
      if (!last && end >= upper - eps) {
        ++g;
        end = upper;
      }
      break;
    }
    start = end;
  }
  return ClickingGroups(map, std::move(members));
}

inline Click click_at(const ProbabilityMap& map, std::size_t index, Polarity polarity) {
  const int w = map.width();
  return Click{static_cast<int>(index % w), static_cast<int>(index / w), polarity, 1,
               Device::kSimulated};
}

/// Samples a click from group `group_index` (1-based).
inline Click sample_click(const ClickingGroups& groups, int group_index, Polarity polarity, Rng& rng) {
  return click_at(groups.source(), groups.draw(group_index, rng), polarity);
}

/// Samples from the whole map: a uniformly chosen group (all groups carry
/// equal mass), then a member of it.
inline Click sample_full_map(const ClickingGroups& groups, Polarity polarity, Rng& rng) {
  const auto g = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(groups.n_groups()))) + 1;
  return sample_click(groups, g, polarity, rng);
}

}  // namespace rclicks
