#pragma once

#include "biofuse/image.hpp"

namespace biofuse {

// Elementwise mean of the two modalities. Inputs must share shape and have
// C=3; output shape equals input shape.
ImageTensor intensity_fuse(const ImageTensor& profile, const ImageTensor& ear);

// Side-by-side composition: profile resized to out_h x out_w/2 fills columns
// [0, W/2), ear fills [W/2, W). out_w must be even.
ImageTensor spatial_fuse(const ImageTensor& profile, const ImageTensor& ear,
                         int out_h, int out_w);

// Channel stacking: channels 0-2 are the profile, 3-5 the ear, bit-exact.
ImageTensor channel_fuse(const ImageTensor& profile, const ImageTensor& ear);

// Extracts channels [first, first+count) as a new tensor (the inverse of
// channel_fuse).
ImageTensor slice_channels(const ImageTensor& img, int first, int count);

}  // namespace biofuse
