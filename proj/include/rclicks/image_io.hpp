#pragma once

// PNG reading and writing. OpenCV's imgcodecs does the codec work; the rest
// of the library never sees a cv::Mat.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "rclicks/error.hpp"
#include "rclicks/imaging.hpp"

namespace rclicks {

/// 8-bit interleaved RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {
    detail::check_dims(w, h);
  }

  std::uint8_t* at(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const {
    return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

namespace detail {

inline cv::Mat read_png(const std::filesystem::path& path) {
  cv::Mat img;
  try {
    img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::kFormatError, "cannot decode " + path.string() + ": " + e.what());
  }
  if (img.empty()) fail(ErrorKind::kFormatError, "cannot read image " + path.string());
  return img;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::kFormatError, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::kFormatError, "failed writing " + path.string());
}

}  // namespace detail

/// Loads a mask PNG; any nonzero sample in the first channel is true.
inline BinaryMask load_mask(const std::filesystem::path& path) {
  const cv::Mat img = detail::read_png(path);
  std::vector<cv::Mat> channels;
  cv::split(img, channels);
  const cv::Mat& first = channels.front();
  BinaryMask mask(first.cols, first.rows);
  for (int y = 0; y < first.rows; ++y) {
    for (int x = 0; x < first.cols; ++x) {
      const bool on = first.depth() == CV_16U ? first.at<std::uint16_t>(y, x) != 0
                                              : first.at<std::uint8_t>(y, x) != 0;
      mask.set(x, y, on);
    }
  }
  return mask;
}

inline std::vector<std::uint8_t> encode_png(const BinaryMask& mask) {
  cv::Mat img(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) img.at<std::uint8_t>(y, x) = mask(x, y) ? 255 : 0;
  std::vector<std::uint8_t> out;
  cv::imencode(".png", img, out);
  return out;
}

inline std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  cv::Mat img(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto* p = image.at(x, y);
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  std::vector<std::uint8_t> out;
  cv::imencode(".png", img, out);
  return out;
}

inline void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  detail::write_bytes(path, encode_png(mask));
}

inline void save_rgb(const std::filesystem::path& path, const RgbImage& image) {
  detail::write_bytes(path, encode_png(image));
}

/// Loads any PNG as RGB; gray images are replicated, alpha is dropped.
inline RgbImage load_rgb(const std::filesystem::path& path) {
  cv::Mat img = detail::read_png(path);
  if (img.depth() == CV_16U) img.convertTo(img, CV_8U, 1.0 / 257.0);
  RgbImage out(img.cols, img.rows);
  const int ch = img.channels();
  for (int y = 0; y < img.rows; ++y) {
    const auto* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.cols; ++x) {
      auto* p = out.at(x, y);
      if (ch == 1) {
        p[0] = p[1] = p[2] = row[x];
      } else {
        p[0] = row[x * ch + 2];
        p[1] = row[x * ch + 1];
        p[2] = row[x * ch + 0];
      }
    }
  }
  return out;
}

/// Reads width and height from a PNG without keeping the pixels.
inline std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
  const cv::Mat img = detail::read_png(path);
  return {img.cols, img.rows};
}

/// Single-channel PNG (8- or 16-bit) as raw sample values.
inline ScalarField load_gray_field(const std::filesystem::path& path) {
  const cv::Mat img = detail::read_png(path);
  if (img.channels() != 1) fail(ErrorKind::kFormatError, path.string() + " is not single-channel");
  std::vector<double> values(static_cast<std::size_t>(img.cols) * img.rows);
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      values[static_cast<std::size_t>(y) * img.cols + x] =
          img.depth() == CV_16U ? img.at<std::uint16_t>(y, x) : img.at<std::uint8_t>(y, x);
    }
  }
  return ScalarField(img.cols, img.rows, std::move(values));
}

inline void save_gray16(const std::filesystem::path& path, int width, int height,
                        const std::vector<std::uint16_t>& samples) {
  cv::Mat img(height, width, CV_16UC1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      img.at<std::uint16_t>(y, x) = samples[static_cast<std::size_t>(y) * width + x];
  std::vector<std::uint8_t> out;
  cv::imencode(".png", img, out);
  detail::write_bytes(path, out);
}

}  // namespace rclicks
