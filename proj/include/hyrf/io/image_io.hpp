#pragma once

#include <string>

#include "hyrf/image.hpp"

namespace hyrf::io {

/// 8-bit PNG (gray, gray+alpha, RGB or RGBA) as a 3-channel image with
/// values byte/255. Alpha is dropped.
Image read_png(const std::string& path);

/// Clamps to [0, 1] and writes round(255 v) as 8-bit RGB (3 channels) or
/// gray (1 channel).
void write_png(const std::string& path, const Image& img);

/// NumPy .npy with shape (H, W, C) or (H, W), dtype <f4 or <f8, C order.
Image read_npy(const std::string& path);
void write_npy(const std::string& path, const Image& img, bool float64 = true);

/// Dispatches on the extension (.png or .npy).
Image read_image(const std::string& path);

}  // namespace hyrf::io
