#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsplan/scene.hpp"

namespace gsplan {

/// Splatting constants. Tile size is a throughput knob only; outputs are
/// tile-size invariant because pixels composite in global depth order.
struct RasterParams {
    double near_plane = 0.01;
    double alpha_min = 1.0 / 255.0;   // contributions below this are skipped
    double alpha_clamp = 0.99;
    double transmittance_stop = 1e-4; // render-time early out
    double cov_floor = 0.3;           // low-pass floor added to cov2d (pixels^2)
    int tile_size = 16;
};

struct GaussianProjection {
    uint32_t gaussian_index = 0;
    Vec2 center_px = Vec2::Zero();
    Mat2 cov2d = Mat2::Identity();
    double depth = 0;
    double radius_px = 0;
};

struct RenderOutput {
    Image rgb;    // 3-channel
    Image depth;  // alpha-normalized expected camera-space z; 0 where alpha = 0
    Image alpha;  // accumulated opacity in [0,1]
};

/// Per-Gaussian visibility statistics for one view.
///
/// transmittance[j]: compositing transmittance accumulated in front of
/// Gaussian j at its projected center pixel (the occupancy consumer).
/// score[j]: peak T*alpha over the footprint, with sub-alpha_min
/// contributions counted as zero (the visible-set consumer).
/// Culled Gaussians carry transmittance 1 and score 0 by convention.
struct VisibilityRecord {
    std::vector<double> score;
    std::vector<double> transmittance;
    std::vector<uint8_t> culled;
};

/// Perspective projection of one Gaussian. Returns nullopt when the splat is
/// behind the near plane or its 3-sigma footprint misses every pixel.
/// cov2d = J W Sigma W^T J^T (upper-left 2x2) + cov_floor * I.
std::optional<GaussianProjection> project_gaussian(const Gaussian& g, const View& view,
                                                   const RasterParams& params = {});

/// Front-to-back alpha compositing over a global depth sort (ties by index),
/// black background. alpha_j = min(alpha_clamp, opacity * exp(-q/2)).
RenderOutput render(const GaussianCloud& cloud, const View& view,
                    const RasterParams& params = {});

VisibilityRecord per_gaussian_visibility(const GaussianCloud& cloud, const View& view,
                                         const RasterParams& params = {});

/// Indices with score >= eps_vis, ascending.
std::vector<uint32_t> visible_set(const GaussianCloud& cloud, const View& view,
                                  double eps_vis = 0.05, const RasterParams& params = {});

std::vector<uint32_t> visible_set(const VisibilityRecord& rec, double eps_vis);

}  // namespace gsplan
