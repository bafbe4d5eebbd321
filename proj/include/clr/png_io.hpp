#pragma once

#include <string>

#include "clr/tensor.hpp"

namespace clr {

/// Decodes a PNG file to a 3xHxW float tensor in [0,1]. Grayscale and alpha
/// inputs are expanded/composited to RGB.
Tensor read_png(const std::string& path);

/// Writes a 3xHxW tensor in [0,1] as an 8-bit RGB PNG.
void write_png(const Tensor& image, const std::string& path);

/// Bilinear resize of a CxHxW tensor to side x side (half-pixel centers).
Tensor resize_bilinear(const Tensor& image, int side);

}  // namespace clr
