#pragma once

#include <string>
#include <string_view>

#include "rclicks/error.hpp"

namespace rclicks {

enum class Polarity { kPositive, kNegative };
enum class Device { kPc, kMobile, kSimulated };

inline const char* to_string(Polarity p) { return p == Polarity::kPositive ? "positive" : "negative"; }

inline const char* to_string(Device d) {
  switch (d) {
    case Device::kPc: return "pc";
    case Device::kMobile: return "mobile";
    case Device::kSimulated: return "simulated";
  }
  return "simulated";
}

inline Device parse_device(std::string_view text) {
  if (text == "pc") return Device::kPc;
  if (text == "mobile") return Device::kMobile;
  if (text == "simulated") return Device::kSimulated;
  fail(ErrorKind::kInvalidParameter, "unknown device '" + std::string(text) + "'");
}

/// One user interaction in pixel coordinates of the owning image.
struct Click {
  int x = 0;
  int y = 0;
  Polarity polarity = Polarity::kPositive;
  int round = 1;
  Device device = Device::kSimulated;

  bool positive() const noexcept { return polarity == Polarity::kPositive; }

  friend bool operator==(const Click&, const Click&) = default;
};

}  // namespace rclicks
