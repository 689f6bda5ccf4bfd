#pragma once

// Pixel-level primitives: masks, scalar fields, exact Euclidean distance
// transform, connected components, separable Gaussian blur and IoU.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rclicks/error.hpp"

namespace rclicks {

namespace detail {

inline void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    fail(ErrorKind::kInvalidParameter,
         "image dimensions must be positive, got " + std::to_string(width) + "x" +
             std::to_string(height));
  }
}

}  // namespace detail

/// Row-major boolean grid. Stored one byte per pixel, normalized to 0/1.
class BinaryMask {
 public:
  BinaryMask(int width, int height) : width_(width), height_(height) {
    detail::check_dims(width, height);
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
  }

  BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
      : width_(width), height_(height), bits_(std::move(bits)) {
    detail::check_dims(width, height);
    if (bits_.size() != static_cast<std::size_t>(width) * height) {
      fail(ErrorKind::kInvalidParameter, "mask bit count does not match dimensions");
    }
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(int x, int y) const noexcept {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }

  void set(int x, int y, bool value = true) noexcept {
    bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }
  void set(std::size_t i, bool value = true) noexcept { bits_[i] = value ? 1 : 0; }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool any() const noexcept {
    return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
  }

  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  BinaryMask operator~() const {
    BinaryMask out = *this;
    for (auto& b : out.bits_) b ^= 1;
    return out;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Row-major field of non-negative reals (distance fields, blurred maps).
class ScalarField {
 public:
  ScalarField(int width, int height) : width_(width), height_(height) {
    detail::check_dims(width, height);
    values_.assign(static_cast<std::size_t>(width) * height, 0.0);
  }

  ScalarField(int width, int height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {
    detail::check_dims(width, height);
    if (values_.size() != static_cast<std::size_t>(width) * height) {
      fail(ErrorKind::kInvalidParameter, "field value count does not match dimensions");
    }
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) {
        fail(ErrorKind::kInvalidParameter, "field values must be finite and non-negative");
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(int x, int y) const noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  double& operator()(int x, int y) noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }

  double sum() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  static ScalarField from_mask(const BinaryMask& mask) {
    ScalarField out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) out.values_[i] = mask[i] ? 1.0 : 0.0;
    return out;
  }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> values_;
};

struct Box {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Tight bounding box of the true pixels; nullopt for an empty mask.
inline std::optional<Box> bounding_box(const BinaryMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return Box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// ---------------------------------------------------------------------------
// Exact Euclidean distance transform
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

namespace detail {

// Parabola intersection abscissa kept as an exact fraction num/den (den > 0),
// with -inf / +inf sentinels for the envelope boundaries.
struct Abscissa {
  std::int64_t num = 0;
  std::int64_t den = 1;
  int inf = 0;
};

inline bool less_equal(const Abscissa& a, const Abscissa& b) {
  if (a.inf != 0 || b.inf != 0) return a.inf < b.inf || (a.inf == b.inf && a.inf != 0);
  return a.num * b.den <= b.num * a.den;
}

inline bool less_than(const Abscissa& a, std::int64_t q) {
  if (a.inf != 0) return a.inf < 0;
  return a.num < q * a.den;
}

// One-dimensional squared EDT (lower envelope of parabolas) over the finite
// entries of f. Entries equal to kUnreachable contribute no parabola.
inline void squared_edt_1d(std::span<const std::int64_t> f, std::span<std::int64_t> d,
                           std::vector<std::int64_t>& v, std::vector<Abscissa>& z) {
  const auto n = static_cast<std::int64_t>(f.size());
  v.resize(f.size());
  z.resize(f.size() + 1);
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == kUnreachable) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = Abscissa{0, 1, -1};
      z[1] = Abscissa{0, 1, +1};
      continue;
    }
    Abscissa s;
    for (;;) {
      const std::int64_t p = v[k];
      s = Abscissa{(f[q] + q * q) - (f[p] + p * p), 2 * (q - p), 0};
      if (!less_equal(s, z[k])) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = Abscissa{0, 1, +1};
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kUnreachable);
    return;
  }
  k = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (less_than(z[k + 1], q)) ++k;
    const std::int64_t dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace detail

/// Squared Euclidean distance from every pixel to the nearest pixel where
/// `feature` is true. When `border_is_feature` is set, a virtual ring of
/// feature pixels surrounds the image. Pixels with no reachable feature get
/// kUnreachable.
inline std::vector<std::int64_t> squared_distance_to(const BinaryMask& feature,
                                                     bool border_is_feature) {
  const int w = feature.width();
  const int h = feature.height();
  std::vector<std::int64_t> g(feature.size(), kUnreachable);

  // Column pass: vertical distance to the nearest feature in the same column.
  std::vector<std::int64_t> up(h);
  for (int x = 0; x < w; ++x) {
    std::int64_t last = border_is_feature ? -1 : std::numeric_limits<std::int64_t>::min();
    bool seen = border_is_feature;
    for (int y = 0; y < h; ++y) {
      if (feature(x, y)) {
        last = y;
        seen = true;
      }
      up[y] = seen ? y - last : kUnreachable;
    }
    seen = border_is_feature;
    std::int64_t next = h;
    for (int y = h - 1; y >= 0; --y) {
      if (feature(x, y)) {
        next = y;
        seen = true;
      }
      const std::int64_t down = seen ? next - y : kUnreachable;
      const std::int64_t best = std::min(up[y], down);
      g[static_cast<std::size_t>(y) * w + x] = best == kUnreachable ? kUnreachable : best * best;
    }
  }

  // Row pass over the row padded with the virtual border columns.
  const int pad = border_is_feature ? 1 : 0;
  const auto len = static_cast<std::size_t>(w + 2 * pad);
  std::vector<std::int64_t> f(len), d(len), v;
  std::vector<detail::Abscissa> z;
  std::vector<std::int64_t> out(feature.size());
  for (int y = 0; y < h; ++y) {
    if (pad) {
      f.front() = 0;
      f.back() = 0;
    }
    for (int x = 0; x < w; ++x) f[x + pad] = g[static_cast<std::size_t>(y) * w + x];
    detail::squared_edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = d[x + pad];
  }
  return out;
}

/// Exact Euclidean distance from each pixel to the nearest false pixel. The
/// image is surrounded by a virtual false ring, so a 1x1 true image yields 1.
inline ScalarField distance_transform(const BinaryMask& mask) {
  const auto sq = squared_distance_to(~mask, /*border_is_feature=*/true);
  std::vector<double> values(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) values[i] = std::sqrt(static_cast<double>(sq[i]));
  return ScalarField(mask.width(), mask.height(), std::move(values));
}

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

/// Region labeling. Ids are 1..count() in raster order of each region's first
/// pixel; 0 marks background.
class LabeledRegions {
 public:
  LabeledRegions(int width, int height, std::vector<int> labels, std::vector<std::size_t> sizes,
                 std::vector<std::size_t> seeds)
      : width_(width),
        height_(height),
        labels_(std::move(labels)),
        sizes_(std::move(sizes)),
        seeds_(std::move(seeds)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int count() const noexcept { return static_cast<int>(sizes_.size()); }

  int label(int x, int y) const noexcept { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const int> labels() const noexcept { return labels_; }

  std::size_t region_size(int id) const { return sizes_.at(static_cast<std::size_t>(id) - 1); }
  std::span<const std::size_t> region_sizes() const noexcept { return sizes_; }
  /// Raster index of the first pixel of region `id`.
  std::size_t seed(int id) const { return seeds_.at(static_cast<std::size_t>(id) - 1); }

  BinaryMask mask_of(int id) const {
    BinaryMask out(width_, height_);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == id) out.set(i);
    }
    return out;
  }

 private:
  int width_;
  int height_;
  std::vector<int> labels_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> seeds_;
};

inline LabeledRegions connected_components(const BinaryMask& mask, int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8) {
    fail(ErrorKind::kInvalidParameter, "connectivity must be 4 or 8");
  }
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels(mask.size(), 0);
  std::vector<std::size_t> sizes, seeds;
  std::vector<std::size_t> stack;

  static constexpr int kDx[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[] = {0, 0, 1, -1, 1, -1, 1, -1};

  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || labels[start] != 0) continue;
    const int id = static_cast<int>(sizes.size()) + 1;
    std::size_t size = 0;
    labels[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int px = static_cast<int>(p % w);
      const int py = static_cast<int>(p / w);
      for (int n = 0; n < connectivity; ++n) {
        const int nx = px + kDx[n];
        const int ny = py + kDy[n];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (mask[q] && labels[q] == 0) {
          labels[q] = id;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(size);
    seeds.push_back(start);
  }
  return LabeledRegions(w, h, std::move(labels), std::move(sizes), std::move(seeds));
}

// ---------------------------------------------------------------------------
// Gaussian blur
// ---------------------------------------------------------------------------

/// Normalized 1D Gaussian taps for offsets -r..r with r = ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorKind::kInvalidParameter, "gaussian sigma must be positive");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double t = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = t;
    total += t;
  }
  for (double& t : taps) t /= total;
  return taps;
}

/// Separable Gaussian convolution with zero padding; mass that falls outside
/// the image is lost.
inline ScalarField gaussian_blur(const ScalarField& field, double sigma) {
  const auto taps = gaussian_kernel(sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  const int w = field.width();
  const int h = field.height();

  ScalarField horizontal(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      const int lo = std::max(-radius, -x);
      const int hi = std::min(radius, w - 1 - x);
      for (int k = lo; k <= hi; ++k) acc += taps[static_cast<std::size_t>(k + radius)] * field(x + k, y);
      horizontal(x, y) = acc;
    }
  }
  ScalarField out(w, h);
  for (int y = 0; y < h; ++y) {
    const int lo = std::max(-radius, -y);
    const int hi = std::min(radius, h - 1 - y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = lo; k <= hi; ++k) acc += taps[static_cast<std::size_t>(k + radius)] * horizontal(x, y + k);
      out(x, y) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mask comparisons
// ---------------------------------------------------------------------------

inline void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::kInvalidParameter,
         "mask dimensions differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
             " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

/// |a & b| / |a | b|, with iou of two empty masks defined as 1.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  std::size_t inter = 0, uni = 0;
  const auto ab = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += ab[i] & bb[i];
    uni += ab[i] | bb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct ErrorRegions {
  BinaryMask false_negative;  // gt & !pred
  BinaryMask false_positive;  // pred & !gt
};

inline ErrorRegions error_regions(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt);
  BinaryMask fn(gt.width(), gt.height());
  BinaryMask fp(gt.width(), gt.height());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    fn.set(i, gt[i] && !pred[i]);
    fp.set(i, pred[i] && !gt[i]);
  }
  return {std::move(fn), std::move(fp)};
}

}  // namespace rclicks
