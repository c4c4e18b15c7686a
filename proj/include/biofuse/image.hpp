#pragma once

#include <string>
#include <vector>

#include "biofuse/common.hpp"

namespace biofuse {

// H x W x C image, values in [0,1], HWC row-major. C is 3 for loaded
// images and 6 after channel fusion.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  double& at(int y, int x, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  std::string shape_str() const;

  // Throws ValidationError if any value leaves [0,1] or shape is degenerate.
  void validate() const;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Decodes an 8-bit image file (any format OpenCV reads: PNG, JPEG, PPM, ...),
// scales to [0,1] RGB and resizes to target_h x target_w with bilinear
// interpolation. Throws IoError on unreadable or corrupt files.
ImageTensor load_image(const std::string& path, int target_h, int target_w);

// Bilinear resize (half-pixel centers, matching OpenCV INTER_LINEAR).
// Same-size calls return a bit-exact copy.
ImageTensor resize_bilinear(const ImageTensor& img, int target_h, int target_w);

// Writes a 3-channel image as an 8-bit file; format chosen by extension.
void save_image(const ImageTensor& img, const std::string& path);

}  // namespace biofuse
