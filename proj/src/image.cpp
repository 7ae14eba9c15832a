#include "gsplan/image.hpp"

#include <algorithm>
#include <cmath>

namespace gsplan {

Image resize_bilinear(const Image& src, int out_w, int out_h) {
    if (src.width <= 0 || src.height <= 0)
        throw PreconditionError("resize_bilinear: empty source");
    if (out_w == src.width && out_h == src.height) return src;

    Image out(out_w, out_h, src.channels);
    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < src.channels; ++c) {
                const double top = (1 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c);
                const double bot = (1 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c);
                out.at(x, y, c) = static_cast<float>((1 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

Image to_gray(const Image& src) {
    if (src.channels == 1) return src;
    Image out(src.width, src.height, 1);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            out.at(x, y) = (src.at(x, y, 0) + src.at(x, y, 1) + src.at(x, y, 2)) / 3.0f;
    return out;
}

}  // namespace gsplan
