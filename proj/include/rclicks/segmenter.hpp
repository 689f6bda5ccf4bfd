#pragma once

// The segmenter seam of the benchmark. A segmenter sees the full click
// history of the current instance and returns a mask at image resolution.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "rclicks/click.hpp"
#include "rclicks/error.hpp"
#include "rclicks/imaging.hpp"

namespace rclicks {

struct SegmentRequest {
  std::string id;  // unique per call within a run
  std::filesystem::path image;
  int width = 0;
  int height = 0;
  std::span<const Click> clicks;
  const BinaryMask* prev_mask = nullptr;
  // Ground truth, for synthetic segmenters only. Never sent to adapters.
  const BinaryMask* gt = nullptr;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual BinaryMask predict(const SegmentRequest& request) = 0;
};

/// Each worker thread builds its own segmenter through one of these.
using SegmenterFactory = std::function<std::unique_ptr<Segmenter>()>;

/// Union of radius-r disks around positive clicks minus the union of disks
/// around negative clicks.
inline BinaryMask disk_mask(std::span<const Click> clicks, int width, int height, int radius) {
  if (radius < 0) fail(ErrorKind::kInvalidParameter, "disk radius must be non-negative");
  BinaryMask pos(width, height), neg(width, height);
  const long long r2 = static_cast<long long>(radius) * radius;
  for (const auto& c : clicks) {
    auto& target = c.positive() ? pos : neg;
    for (int y = std::max(0, c.y - radius); y <= std::min(height - 1, c.y + radius); ++y) {
      for (int x = std::max(0, c.x - radius); x <= std::min(width - 1, c.x + radius); ++x) {
        const long long dx = x - c.x, dy = y - c.y;
        if (dx * dx + dy * dy <= r2) target.set(x, y);
      }
    }
  }
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (neg[i]) pos.set(i, false);
  return pos;
}

class DiskSegmenter final : public Segmenter {
 public:
  explicit DiskSegmenter(int radius) : radius_(radius) {
    if (radius < 0) fail(ErrorKind::kInvalidParameter, "disk radius must be non-negative");
  }

  BinaryMask predict(const SegmentRequest& r) override {
    if (r.clicks.empty()) fail(ErrorKind::kInvalidParameter, "disk segmenter needs a click");
    return disk_mask(r.clicks, r.width, r.height, radius_);
  }

 private:
  int radius_;
};

/// Returns the ground truth on any click.
class OracleSegmenter final : public Segmenter {
 public:
  BinaryMask predict(const SegmentRequest& r) override {
    if (r.gt == nullptr) fail(ErrorKind::kAdapterError, "oracle segmenter needs ground truth");
    return *r.gt;
  }
};

/// Never predicts anything.
class EmptySegmenter final : public Segmenter {
 public:
  BinaryMask predict(const SegmentRequest& r) override { return BinaryMask(r.width, r.height); }
};

}  // namespace rclicks
