#pragma once

#include <cstdint>
#include <vector>

#include "gsplan/errors.hpp"

namespace gsplan {

/// Row-major float image, 1 or 3 channels, values nominally in [0,1]
/// (perceptual-distance maps may exceed 1; they are clamped downstream).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          pixels(static_cast<size_t>(w) * h * c, fill) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw PreconditionError("Image: invalid dimensions");
    }

    float& at(int x, int y, int c = 0) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return pixels.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Bilinear resize with half-pixel coordinate mapping, edge-clamped.
Image resize_bilinear(const Image& src, int out_w, int out_h);

/// Mean of channels; identity for single-channel images.
Image to_gray(const Image& src);

}  // namespace gsplan
