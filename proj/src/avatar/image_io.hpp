#pragma once

#include <string>

#include "avatar/image.hpp"

namespace avatar {

// 8-bit PNG previews.
void save_png(const ColorImage& img, const std::string& path);
void save_png(const MaskImage& mask, const std::string& path);
// Normals encoded as (n + 1) / 2.
void save_normal_png(const NormalImage& normals, const std::string& path);

ColorImage load_png(const std::string& path);
MaskImage load_mask_png(const std::string& path);
NormalImage load_normal_png(const std::string& path);

// 32-bit float binary plane: magic "FPLN", int32 width/height/channels,
// little-endian float32 payload.
void save_float_plane(const ScalarImage& img, const std::string& path);
ScalarImage load_float_plane(const std::string& path);

}  // namespace avatar
