#pragma once

// PNG/JPEG decode and encode, kept out of the pure imaging core. Pulls in
// OpenCV imgcodecs; link opencv_core + opencv_imgcodecs when including this.

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "vista/data.hpp"
#include "vista/image.hpp"

namespace vista {

inline bool supported_image_extension(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return false;
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == "png" || ext == "jpg" || ext == "jpeg";
}

inline ImageBuffer load_image(const std::string& path) {
  if (!supported_image_extension(path))
    throw data_error("unsupported image format (PNG/JPEG only): " + path);
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw data_error("cannot decode image: " + path);
  ImageBuffer out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y)
    for (int x = 0; x < bgr.cols; ++x) {
      const cv::Vec3b px = bgr.at<cv::Vec3b>(y, x);
      out.at(x, y, 0) = px[2] / 255.0f;
      out.at(x, y, 1) = px[1] / 255.0f;
      out.at(x, y, 2) = px[0] / 255.0f;
    }
  return out;
}

inline void save_image(const ImageBuffer& image, const std::string& path) {
  if (!supported_image_extension(path))
    throw data_error("unsupported image format (PNG/JPEG only): " + path);
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      auto q = [&](int c) {
        return cv::saturate_cast<uchar>(
            std::lround(255.0 * std::clamp(image.at(x, y, c), 0.0f, 1.0f)));
      };
      bgr.at<cv::Vec3b>(y, x) = cv::Vec3b(q(2), q(1), q(0));
    }
  if (!cv::imwrite(path, bgr))
    throw data_error("cannot write image: " + path);
}

}  // namespace vista
