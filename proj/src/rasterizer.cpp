#include "gsplan/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "parallel.hpp"

namespace gsplan {

namespace {

// Render-ready projected splat. conic_* is the inverse 2D covariance;
// q_max is the Mahalanobis bound at which alpha drops below alpha_min
// (negative when the splat can never contribute).
struct Splat {
    double cx, cy;
    double conic_a, conic_b, conic_c;
    double q_max;
    double opacity;
    double depth;
    float r, g, b;
    int x0, x1, y0, y1;  // inclusive pixel bounds, clamped to the image
    int center_ix, center_iy;
    uint32_t index;
};

// Sample points sit at pixel centers (ix + 0.5, iy + 0.5).
bool pixel_bounds(double c, double radius, int limit, int& lo, int& hi) {
    lo = std::max(0, static_cast<int>(std::ceil(c - radius - 0.5)));
    hi = std::min(limit - 1, static_cast<int>(std::floor(c + radius - 0.5)));
    return lo <= hi;
}

bool project_to_splat(const Gaussian& g, uint32_t index, const View& view,
                      const RasterParams& params, Splat& out) {
    const Vec3 p_cam = view.rotation * g.mean + view.translation;
    const double z = p_cam.z();
    if (z <= params.near_plane) return false;

    const double px = view.fx * p_cam.x() / z + view.cx;
    const double py = view.fy * p_cam.y() / z + view.cy;

    const Mat3 rot = g.rotation_matrix();
    const Mat3 sigma_world =
        rot * g.scale.cwiseProduct(g.scale).asDiagonal() * rot.transpose();
    const Mat3 sigma_cam = view.rotation * sigma_world * view.rotation.transpose();

    Eigen::Matrix<double, 2, 3> jac;
    jac << view.fx / z, 0, -view.fx * p_cam.x() / (z * z),
           0, view.fy / z, -view.fy * p_cam.y() / (z * z);
    Mat2 cov2d = jac * sigma_cam * jac.transpose();
    cov2d(0, 0) += params.cov_floor;
    cov2d(1, 1) += params.cov_floor;

    const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(0, 1);
    if (det <= 0) return false;
    const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = 3.0 * std::sqrt(lambda_max);

    if (!pixel_bounds(px, radius, view.width, out.x0, out.x1)) return false;
    if (!pixel_bounds(py, radius, view.height, out.y0, out.y1)) return false;

    out.cx = px;
    out.cy = py;
    out.conic_a = cov2d(1, 1) / det;
    out.conic_b = -cov2d(0, 1) / det;
    out.conic_c = cov2d(0, 0) / det;
    out.q_max = 2.0 * std::log(g.opacity / params.alpha_min);
    out.opacity = g.opacity;
    out.depth = z;
    out.r = static_cast<float>(g.color[0]);
    out.g = static_cast<float>(g.color[1]);
    out.b = static_cast<float>(g.color[2]);
    out.center_ix = std::clamp(static_cast<int>(std::floor(px)), 0, view.width - 1);
    out.center_iy = std::clamp(static_cast<int>(std::floor(py)), 0, view.height - 1);
    out.index = index;
    return true;
}

struct TileGrid {
    int tile = 16;
    int tiles_x = 0, tiles_y = 0;
    // CSR layout: entries[offsets[t] .. offsets[t+1]) are splat ids in
    // global depth order.
    std::vector<uint32_t> offsets;
    std::vector<uint32_t> entries;
};

// Splats must already be depth-sorted; per-tile lists inherit the order.
TileGrid bin_tiles(const std::vector<Splat>& splats, int width, int height, int tile) {
    TileGrid grid;
    grid.tile = tile;
    grid.tiles_x = (width + tile - 1) / tile;
    grid.tiles_y = (height + tile - 1) / tile;
    const size_t n_tiles = static_cast<size_t>(grid.tiles_x) * grid.tiles_y;
    grid.offsets.assign(n_tiles + 1, 0);

    auto tile_span = [&](const Splat& s, int& tx0, int& tx1, int& ty0, int& ty1) {
        tx0 = s.x0 / tile;
        tx1 = s.x1 / tile;
        ty0 = s.y0 / tile;
        ty1 = s.y1 / tile;
    };

    for (const Splat& s : splats) {
        int tx0, tx1, ty0, ty1;
        tile_span(s, tx0, tx1, ty0, ty1);
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                ++grid.offsets[static_cast<size_t>(ty) * grid.tiles_x + tx + 1];
    }
    std::partial_sum(grid.offsets.begin(), grid.offsets.end(), grid.offsets.begin());
    grid.entries.resize(grid.offsets.back());
    std::vector<uint32_t> cursor(grid.offsets.begin(), grid.offsets.end() - 1);
    for (uint32_t i = 0; i < splats.size(); ++i) {
        int tx0, tx1, ty0, ty1;
        tile_span(splats[i], tx0, tx1, ty0, ty1);
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                grid.entries[cursor[static_cast<size_t>(ty) * grid.tiles_x + tx]++] = i;
    }
    return grid;
}

std::vector<Splat> project_all(const GaussianCloud& cloud, const View& view,
                               const RasterParams& params, bool keep_subthreshold) {
    std::vector<Splat> splats;
    splats.reserve(cloud.count());
    Splat s;
    for (uint32_t i = 0; i < cloud.count(); ++i) {
        if (!keep_subthreshold && cloud[i].opacity < params.alpha_min) continue;
        if (project_to_splat(cloud[i], i, view, params, s)) splats.push_back(s);
    }
    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.index < b.index;
    });
    return splats;
}

constexpr double kVisFreeze = 1e-12;  // visibility-pass transmittance floor

}  // namespace

std::optional<GaussianProjection> project_gaussian(const Gaussian& g, const View& view,
                                                   const RasterParams& params) {
    Splat s;
    if (!project_to_splat(g, 0, view, params, s)) return std::nullopt;
    GaussianProjection proj;
    proj.gaussian_index = 0;
    proj.center_px = Vec2(s.cx, s.cy);
    // Recover cov2d from the conic.
    const double det_inv = s.conic_a * s.conic_c - s.conic_b * s.conic_b;
    proj.cov2d << s.conic_c / det_inv, -s.conic_b / det_inv,
                  -s.conic_b / det_inv, s.conic_a / det_inv;
    proj.depth = s.depth;
    const double mid = 0.5 * (proj.cov2d(0, 0) + proj.cov2d(1, 1));
    const double det = proj.cov2d.determinant();
    proj.radius_px = 3.0 * std::sqrt(mid + std::sqrt(std::max(0.0, mid * mid - det)));
    return proj;
}

RenderOutput render(const GaussianCloud& cloud, const View& view, const RasterParams& params) {
    const int w = view.width, h = view.height;
    RenderOutput out;
    out.rgb = Image(w, h, 3);
    out.depth = Image(w, h, 1);
    out.alpha = Image(w, h, 1);

    const std::vector<Splat> splats = project_all(cloud, view, params, false);
    if (splats.empty()) return out;
    const TileGrid grid = bin_tiles(splats, w, h, params.tile_size);
    const size_t n_tiles = static_cast<size_t>(grid.tiles_x) * grid.tiles_y;

    parallel_for_chunks(n_tiles, [&](size_t t_begin, size_t t_end) {
        std::vector<double> trans, acc_r, acc_g, acc_b, acc_d;
        for (size_t t = t_begin; t < t_end; ++t) {
            const int tx = static_cast<int>(t) % grid.tiles_x;
            const int ty = static_cast<int>(t) / grid.tiles_x;
            const int px0 = tx * grid.tile, py0 = ty * grid.tile;
            const int px1 = std::min(w, px0 + grid.tile), py1 = std::min(h, py0 + grid.tile);
            const int tw = px1 - px0, th = py1 - py0;
            const size_t n_px = static_cast<size_t>(tw) * th;

            trans.assign(n_px, 1.0);
            acc_r.assign(n_px, 0.0);
            acc_g.assign(n_px, 0.0);
            acc_b.assign(n_px, 0.0);
            acc_d.assign(n_px, 0.0);
            size_t active = n_px;

            for (uint32_t e = grid.offsets[t]; e < grid.offsets[t + 1] && active > 0; ++e) {
                const Splat& s = splats[grid.entries[e]];
                const int sx0 = std::max(s.x0, px0), sx1 = std::min(s.x1, px1 - 1);
                const int sy0 = std::max(s.y0, py0), sy1 = std::min(s.y1, py1 - 1);
                for (int py = sy0; py <= sy1; ++py) {
                    const double dy = (py + 0.5) - s.cy;
                    size_t p = static_cast<size_t>(py - py0) * tw + (sx0 - px0);
                    for (int px = sx0; px <= sx1; ++px, ++p) {
                        double& T = trans[p];
                        if (T < params.transmittance_stop) continue;
                        const double dx = (px + 0.5) - s.cx;
                        const double q = s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy +
                                         s.conic_c * dy * dy;
                        if (q > s.q_max) continue;
                        const double alpha =
                            std::min(params.alpha_clamp, s.opacity * std::exp(-0.5 * q));
                        const double weight = T * alpha;
                        acc_r[p] += weight * s.r;
                        acc_g[p] += weight * s.g;
                        acc_b[p] += weight * s.b;
                        acc_d[p] += weight * s.depth;
                        T *= 1.0 - alpha;
                        if (T < params.transmittance_stop) --active;
                    }
                }
            }

            for (int py = py0; py < py1; ++py) {
                for (int px = px0; px < px1; ++px) {
                    const size_t p = static_cast<size_t>(py - py0) * tw + (px - px0);
                    const double a = 1.0 - trans[p];
                    out.rgb.at(px, py, 0) = static_cast<float>(acc_r[p]);
                    out.rgb.at(px, py, 1) = static_cast<float>(acc_g[p]);
                    out.rgb.at(px, py, 2) = static_cast<float>(acc_b[p]);
                    out.alpha.at(px, py) = static_cast<float>(a);
                    out.depth.at(px, py) = a > 0 ? static_cast<float>(acc_d[p] / a) : 0.0f;
                }
            }
        }
    });
    return out;
}

VisibilityRecord per_gaussian_visibility(const GaussianCloud& cloud, const View& view,
                                         const RasterParams& params) {
    const size_t n = cloud.count();
    VisibilityRecord rec;
    rec.score.assign(n, 0.0);
    rec.transmittance.assign(n, 1.0);
    rec.culled.assign(n, 1);

    const int w = view.width, h = view.height;
    const std::vector<Splat> splats = project_all(cloud, view, params, true);
    if (splats.empty()) return rec;
    for (const Splat& s : splats) rec.culled[s.index] = 0;

    const TileGrid grid = bin_tiles(splats, w, h, params.tile_size);
    const size_t n_tiles = static_cast<size_t>(grid.tiles_x) * grid.tiles_y;

    const int workers = std::min<size_t>(thread_budget(), n_tiles);
    std::vector<std::vector<double>> thread_scores;
    std::atomic<int> next_slot{0};

    if (workers > 1) thread_scores.assign(workers, std::vector<double>());

    parallel_for_chunks(n_tiles, [&](size_t t_begin, size_t t_end) {
        std::vector<double>* score_out = &rec.score;
        if (workers > 1) {
            auto& slot = thread_scores[next_slot.fetch_add(1)];
            slot.assign(n, 0.0);
            score_out = &slot;
        }
        std::vector<double>& score = *score_out;
        std::vector<double> trans;

        for (size_t t = t_begin; t < t_end; ++t) {
            const int tx = static_cast<int>(t) % grid.tiles_x;
            const int ty = static_cast<int>(t) / grid.tiles_x;
            const int px0 = tx * grid.tile, py0 = ty * grid.tile;
            const int px1 = std::min(w, px0 + grid.tile), py1 = std::min(h, py0 + grid.tile);
            const int tw = px1 - px0, th = py1 - py0;
            const size_t n_px = static_cast<size_t>(tw) * th;

            trans.assign(n_px, 1.0);
            size_t active = n_px;

            for (uint32_t e = grid.offsets[t]; e < grid.offsets[t + 1]; ++e) {
                const Splat& s = splats[grid.entries[e]];
                const bool center_here = s.center_ix >= px0 && s.center_ix < px1 &&
                                         s.center_iy >= py0 && s.center_iy < py1;
                if (center_here) {
                    // Front transmittance at the center pixel, before this
                    // splat's own contribution.
                    const size_t p =
                        static_cast<size_t>(s.center_iy - py0) * tw + (s.center_ix - px0);
                    rec.transmittance[s.index] = trans[p];
                }
                if (active == 0) continue;  // only center recording remains
                if (s.q_max < 0) continue;  // opacity below the contribution cutoff

                const int sx0 = std::max(s.x0, px0), sx1 = std::min(s.x1, px1 - 1);
                const int sy0 = std::max(s.y0, py0), sy1 = std::min(s.y1, py1 - 1);
                for (int py = sy0; py <= sy1; ++py) {
                    const double dy = (py + 0.5) - s.cy;
                    size_t p = static_cast<size_t>(py - py0) * tw + (sx0 - px0);
                    for (int px = sx0; px <= sx1; ++px, ++p) {
                        double& T = trans[p];
                        if (T < kVisFreeze) continue;
                        const double dx = (px + 0.5) - s.cx;
                        const double q = s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy +
                                         s.conic_c * dy * dy;
                        if (q > s.q_max) continue;
                        const double alpha =
                            std::min(params.alpha_clamp, s.opacity * std::exp(-0.5 * q));
                        const double weight = T * alpha;
                        if (weight > score[s.index]) score[s.index] = weight;
                        T *= 1.0 - alpha;
                        if (T < kVisFreeze) --active;
                    }
                }
            }
        }
    });

    if (workers > 1) {
        for (const auto& part : thread_scores) {
            if (part.empty()) continue;
            for (size_t i = 0; i < n; ++i)
                if (part[i] > rec.score[i]) rec.score[i] = part[i];
        }
    }
    return rec;
}

std::vector<uint32_t> visible_set(const VisibilityRecord& rec, double eps_vis) {
    if (!(eps_vis > 0 && eps_vis < 1))
        throw PreconditionError("visible_set: eps_vis must be in (0,1)");
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < rec.score.size(); ++i)
        if (rec.score[i] >= eps_vis) out.push_back(i);
    return out;
}

std::vector<uint32_t> visible_set(const GaussianCloud& cloud, const View& view, double eps_vis,
                                  const RasterParams& params) {
    return visible_set(per_gaussian_visibility(cloud, view, params), eps_vis);
}

}  // namespace gsplan
