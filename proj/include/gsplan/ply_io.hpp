#pragma once

#include <string>

#include "gsplan/scene.hpp"

namespace gsplan {

/// Reads a standard 3DGS checkpoint PLY (ascii or binary_little_endian).
/// Required vertex properties: x,y,z, f_dc_0..2, opacity, scale_0..2,
/// rot_0..3; anything else (normals, f_rest_*) is skipped. Activations are
/// applied on load: opacity = sigmoid(raw), scale = exp(raw),
/// color = clamp(0.5 + C0 * f_dc, 0, 1), quaternion normalized.
GaussianCloud load_gaussian_ply(const std::string& path);

}  // namespace gsplan
