#include "gsplan/scene.hpp"

#include <algorithm>
#include <cmath>

#include "gsplan/errors.hpp"

namespace gsplan {

void View::validate() const {
    if (width <= 0 || height <= 0) throw DataError("View " + id + ": non-positive resolution");
    if (!(fx > 0) || !(fy > 0)) throw DataError("View " + id + ": non-positive focal length");
    if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height))
        throw DataError("View " + id + ": principal point outside image");
    const Mat3 rtr = rotation.transpose() * rotation;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(rotation.determinant() - 1.0) > 1e-6)
        throw DataError("View " + id + ": rotation not orthonormal");
    if (!translation.allFinite()) throw DataError("View " + id + ": non-finite translation");
}

namespace {

// Linear-interpolated order statistic over an unsorted copy.
double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double pos = q * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

constexpr double kMinEdge = 1e-3;

}  // namespace

AABB compute_scene_bbox(const GaussianCloud& cloud, const std::vector<View>& views,
                        double lo_pct, double hi_pct, double margin) {
    if (cloud.count() == 0) throw PreconditionError("compute_scene_bbox: empty cloud");
    if (!(lo_pct >= 0 && lo_pct < hi_pct && hi_pct <= 1))
        throw PreconditionError("compute_scene_bbox: bad percentile range");

    AABB box;
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> coords;
        coords.reserve(cloud.count());
        for (const auto& g : cloud.gaussians) coords.push_back(g.mean[axis]);
        box.min[axis] = percentile(coords, lo_pct);
        box.max[axis] = percentile(std::move(coords), hi_pct);
    }
    for (const auto& v : views) {
        const Vec3 c = v.camera_center();
        box.min = box.min.cwiseMin(c);
        box.max = box.max.cwiseMax(c);
    }

    // Degenerate edges first so the margin works off a positive diagonal.
    for (int axis = 0; axis < 3; ++axis) {
        const double edge = box.max[axis] - box.min[axis];
        if (edge < kMinEdge) {
            const double pad = (kMinEdge - edge) / 2.0;
            box.min[axis] -= pad;
            box.max[axis] += pad;
        }
    }

    const double expand = margin * box.diagonal();
    box.min.array() -= expand;
    box.max.array() += expand;
    return box;
}

}  // namespace gsplan
