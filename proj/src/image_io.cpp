#include "biofuse/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <sstream>

namespace biofuse {

ImageTensor::ImageTensor(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw DimensionError("ImageTensor: non-positive shape " +
                         std::to_string(height) + "x" + std::to_string(width) +
                         "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

std::string ImageTensor::shape_str() const {
  std::ostringstream os;
  os << height_ << "x" << width_ << "x" << channels_;
  return os.str();
}

void ImageTensor::validate() const {
  if (height_ <= 0 || width_ <= 0 || (channels_ != 3 && channels_ != 6)) {
    throw ValidationError("ImageTensor: invalid shape " + shape_str());
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("ImageTensor: value " + std::to_string(v) +
                            " outside [0,1]");
    }
  }
}

namespace {

cv::Mat to_mat(const ImageTensor& img) {
  if (img.channels() != 3) {
    throw DimensionError("expected 3-channel image, got " + img.shape_str());
  }
  cv::Mat m(img.height(), img.width(), CV_64FC3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto& px = m.at<cv::Vec3d>(y, x);
      px[0] = img.at(y, x, 0);
      px[1] = img.at(y, x, 1);
      px[2] = img.at(y, x, 2);
    }
  }
  return m;
}

ImageTensor from_mat(const cv::Mat& m) {
  ImageTensor img(m.rows, m.cols, 3);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3d>(y, x);
      img.at(y, x, 0) = px[0];
      img.at(y, x, 1) = px[1];
      img.at(y, x, 2) = px[2];
    }
  }
  return img;
}

}  // namespace

ImageTensor load_image(const std::string& path, int target_h, int target_w) {
  cv::Mat raw = cv::imread(path, cv::IMREAD_COLOR);
  if (raw.empty()) {
    throw IoError("cannot read image file: " + path);
  }
  cv::Mat rgb;
  cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
  cv::Mat scaled;
  rgb.convertTo(scaled, CV_64FC3, 1.0 / 255.0);
  return resize_bilinear(from_mat(scaled), target_h, target_w);
}

ImageTensor resize_bilinear(const ImageTensor& img, int target_h, int target_w) {
  if (target_h <= 0 || target_w <= 0) {
    throw DimensionError("resize_bilinear: non-positive target size");
  }
  if (target_h == img.height() && target_w == img.width()) {
    return img;
  }
  cv::Mat resized;
  cv::resize(to_mat(img), resized, cv::Size(target_w, target_h), 0, 0,
             cv::INTER_LINEAR);
  // Bilinear interpolation is a convex combination, but clamp to be safe
  // against last-bit rounding so the [0,1] invariant stays exact.
  ImageTensor out = from_mat(resized);
  for (double& v : out.data()) {
    v = std::min(1.0, std::max(0.0, v));
  }
  return out;
}

void save_image(const ImageTensor& img, const std::string& path) {
  cv::Mat rgb = to_mat(img);
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  cv::Mat bytes;
  bgr.convertTo(bytes, CV_8UC3, 255.0);
  if (!cv::imwrite(path, bytes)) {
    throw IoError("cannot write image file: " + path);
  }
}

}  // namespace biofuse
