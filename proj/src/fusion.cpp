#include "biofuse/fusion.hpp"

namespace biofuse {

namespace {

void require_same_rgb(const ImageTensor& a, const ImageTensor& b,
                      const char* op) {
  if (a.channels() != 3 || b.channels() != 3) {
    throw DimensionError(std::string(op) + ": inputs must have 3 channels, got " +
                         a.shape_str() + " and " + b.shape_str());
  }
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
  }
}

}  // namespace

ImageTensor intensity_fuse(const ImageTensor& profile, const ImageTensor& ear) {
  require_same_rgb(profile, ear, "intensity_fuse");
  ImageTensor out(profile.height(), profile.width(), 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = 0.5 * (profile.data()[i] + ear.data()[i]);
  }
  return out;
}

ImageTensor spatial_fuse(const ImageTensor& profile, const ImageTensor& ear,
                         int out_h, int out_w) {
  if (profile.channels() != 3 || ear.channels() != 3) {
    throw DimensionError("spatial_fuse: inputs must have 3 channels");
  }
  if (out_w % 2 != 0) {
    throw ConfigError("spatial_fuse: output width must be even, got " +
                      std::to_string(out_w));
  }
  const int half = out_w / 2;
  const ImageTensor left = resize_bilinear(profile, out_h, half);
  const ImageTensor right = resize_bilinear(ear, out_h, half);
  ImageTensor out(out_h, out_w, 3);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < half; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = left.at(y, x, c);
        out.at(y, x + half, c) = right.at(y, x, c);
      }
    }
  }
  return out;
}

ImageTensor channel_fuse(const ImageTensor& profile, const ImageTensor& ear) {
  require_same_rgb(profile, ear, "channel_fuse");
  ImageTensor out(profile.height(), profile.width(), 6);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = profile.at(y, x, c);
        out.at(y, x, c + 3) = ear.at(y, x, c);
      }
    }
  }
  return out;
}

ImageTensor slice_channels(const ImageTensor& img, int first, int count) {
  if (first < 0 || count <= 0 || first + count > img.channels()) {
    throw DimensionError("slice_channels: range [" + std::to_string(first) +
                         ", " + std::to_string(first + count) +
                         ") outside " + img.shape_str());
  }
  ImageTensor out(img.height(), img.width(), count);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < count; ++c) {
        out.at(y, x, c) = img.at(y, x, first + c);
      }
    }
  }
  return out;
}

}  // namespace biofuse
