#pragma once

// Run-length encoding of binary masks as used on the segmenter wire: row-major
// alternating run lengths, starting with a (possibly empty) run of zeros.

#include <cstdint>
#include <string>
#include <vector>

#include "rclicks/error.hpp"
#include "rclicks/imaging.hpp"

namespace rclicks {

inline std::vector<std::uint64_t> rle_encode(const BinaryMask& mask) {
  std::vector<std::uint64_t> runs;
  bool current = false;
  std::uint64_t length = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != current) {
      runs.push_back(length);
      current = !current;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

inline BinaryMask rle_decode(const std::vector<std::uint64_t>& runs, int width, int height) {
  BinaryMask mask(width, height);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto run : runs) {
    if (run > mask.size() - pos) {
      fail(ErrorKind::kFormatError, "RLE runs exceed " + std::to_string(mask.size()) + " pixels");
    }
    if (value) {
      for (std::uint64_t k = 0; k < run; ++k) mask.set(static_cast<std::size_t>(pos + k));
    }
    pos += run;
    value = !value;
  }
  if (pos != mask.size()) {
    fail(ErrorKind::kFormatError, "RLE runs cover " + std::to_string(pos) + " of " +
                                      std::to_string(mask.size()) + " pixels");
  }
  return mask;
}

}  // namespace rclicks
