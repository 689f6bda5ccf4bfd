#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rclicks/error.hpp"
#include "rclicks/image_io.hpp"
#include "rclicks/imaging.hpp"

namespace rclicks {

inline constexpr double kMassTolerance = 1e-9;

/// Per-pixel click probability; non-negative and summing to one.
class ProbabilityMap {
 public:
  /// Takes probabilities that already sum to one (within kMassTolerance).
  ProbabilityMap(int width, int height, std::vector<double> probs)
      : width_(width), height_(height), probs_(std::move(probs)) {
    detail::check_dims(width, height);
    if (probs_.size() != static_cast<std::size_t>(width) * height) {
      fail(ErrorKind::kInvalidParameter, "probability count does not match dimensions");
    }
    const double total = checked_total(probs_);
    if (std::abs(total - 1.0) > kMassTolerance) {
      fail(ErrorKind::kInvalidParameter,
           "probabilities sum to " + std::to_string(total) + ", expected 1");
    }
  }

  /// Normalizes arbitrary non-negative weights. A map whose mass is already
  /// one within kMassTolerance is kept unchanged.
  static ProbabilityMap from_weights(int width, int height, std::vector<double> weights) {
    detail::check_dims(width, height);
    if (weights.size() != static_cast<std::size_t>(width) * height) {
      fail(ErrorKind::kInvalidParameter, "weight count does not match dimensions");
    }
    const double total = checked_total(weights);
    if (std::abs(total - 1.0) > kMassTolerance) {
      for (double& w : weights) w /= total;
    }
    return ProbabilityMap(width, height, std::move(weights));
  }

  static ProbabilityMap from_field(const ScalarField& field) {
    std::vector<double> w(field.values().begin(), field.values().end());
    return from_weights(field.width(), field.height(), std::move(w));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return probs_.size(); }

  double operator()(int x, int y) const noexcept {
    return probs_[static_cast<std::size_t>(y) * width_ + x];
  }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  /// Raster index of the most probable pixel (lowest index on ties).
  std::size_t argmax() const noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs_.size(); ++i)
      if (probs_[i] > probs_[best]) best = i;
    return best;
  }

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;

 private:
  static double checked_total(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0) {
        fail(ErrorKind::kInvalidParameter, "probabilities must be finite and non-negative");
      }
      total += v;
    }
    if (!(total > 0.0)) fail(ErrorKind::kDegenerateMap, "map has zero total mass");
    return total;
  }

  int width_;
  int height_;
  std::vector<double> probs_;
};

/// Bilinear resampling with pixel-center alignment and edge clamping.
inline std::vector<double> resample_bilinear(std::span<const double> src, int src_w, int src_h,
                                             int dst_w, int dst_h) {
  std::vector<double> out(static_cast<std::size_t>(dst_w) * dst_h);
  const double sx_scale = static_cast<double>(src_w) / dst_w;
  const double sy_scale = static_cast<double>(src_h) / dst_h;
  for (int y = 0; y < dst_h; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double sx =
          std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(src_w - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = sx - x0;
      auto at = [&](int xx, int yy) { return src[static_cast<std::size_t>(yy) * src_w + xx]; };
      const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
      const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
      out[static_cast<std::size_t>(y) * dst_w + x] = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

namespace detail {

template <typename T>
T from_le_bytes(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(u);
}

template <typename T>
void append_le_bytes(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U u = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(u >> (8 * i)));
}

}  // namespace detail

/// Binary map layout: int32 LE height, int32 LE width, then height*width
/// float64 LE values in row-major order.
inline void save_probability_map(const std::filesystem::path& path, const ProbabilityMap& map) {
  std::vector<unsigned char> bytes;
  bytes.reserve(8 + map.size() * 8);
  detail::append_le_bytes<std::int32_t>(bytes, map.height());
  detail::append_le_bytes<std::int32_t>(bytes, map.width());
  for (double p : map.probs()) detail::append_le_bytes<double>(bytes, p);
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kFormatError, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace detail {

inline ScalarField read_binary_map(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kFormatError, "cannot open probability map " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) fail(ErrorKind::kFormatError, path.string() + ": truncated header");
  const auto h = from_le_bytes<std::int32_t>(bytes.data());
  const auto w = from_le_bytes<std::int32_t>(bytes.data() + 4);
  if (w < 1 || h < 1) fail(ErrorKind::kFormatError, path.string() + ": invalid dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() != 8 + n * 8) {
    fail(ErrorKind::kFormatError, path.string() + ": expected " + std::to_string(8 + n * 8) +
                                      " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = from_le_bytes<double>(bytes.data() + 8 + i * 8);
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      fail(ErrorKind::kFormatError, path.string() + ": negative or non-finite value at index " +
                                        std::to_string(i));
    }
  }
  return ScalarField(w, h, std::move(values));
}

}  // namespace detail

/// Loads a clickability map from a 16-bit (or 8-bit) PNG or the binary
/// layout above, resamples it bilinearly to `target` (width, height) when the
/// dimensions differ, and renormalizes. Any problem is a format-error.
inline ProbabilityMap load_probability_map(const std::filesystem::path& path,
                                           std::optional<std::pair<int, int>> target = std::nullopt) {
  ScalarField field = [&] {
    try {
      if (path.extension() == ".png") return load_gray_field(path);
      return detail::read_binary_map(path);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kFormatError) throw;
      fail(ErrorKind::kFormatError, path.string() + ": " + e.what());
    }
  }();
  int w = field.width();
  int h = field.height();
  std::vector<double> values(field.values().begin(), field.values().end());
  if (target && (target->first != w || target->second != h)) {
    values = resample_bilinear(values, w, h, target->first, target->second);
    w = target->first;
    h = target->second;
  }
  try {
    return ProbabilityMap::from_weights(w, h, std::move(values));
  } catch (const Error& e) {
    fail(ErrorKind::kFormatError, path.string() + ": " + e.what());
  }
}

}  // namespace rclicks
