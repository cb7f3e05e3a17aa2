#pragma once

// Flat binary tensor files ("NGF1": 16-byte header, u32 dims, f32 LE data)
// carry exact pixel data; 8-bit PNGs are previews only.

#include <string>

#include "noisegen/tensor.hpp"

namespace ng {

void save_tensor_f32(const std::string& path, const TensorF& t);
TensorF load_tensor_f32(const std::string& path);

// (1,3,H,W) or (1,1,H,W) in [0,1]; values are clamped and quantized.
void write_png(const std::string& path, const TensorF& img);

}  // namespace ng
