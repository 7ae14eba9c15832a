#pragma once

#include <string>

#include "gsplan/image.hpp"

namespace gsplan {

/// 8-bit PNG, values clamped to [0,1] and quantized with round(v*255).
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

/// Portable float map ("PF" color / "Pf" gray), little-endian, bottom-up rows.
void write_pfm(const std::string& path, const Image& img);
Image read_pfm(const std::string& path);

/// Dispatch on extension (.png / .pfm).
Image read_image(const std::string& path);

}  // namespace gsplan
