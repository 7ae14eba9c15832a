#pragma once

#include <string>
#include <vector>

#include "gsplan/scene.hpp"

namespace gsplan {

/// Loads cameras.json: an array of
///   {id, width, height, fx, fy, cx, cy,
///    rotation: [9] row-major world-to-camera, translation: [3],
///    image: optional path relative to the json file}.
/// Views come back in file order with kind=training; referenced images are
/// loaded eagerly. Schema violations raise FormatError with a JSON pointer.
std::vector<View> load_cameras(const std::string& path);

}  // namespace gsplan
