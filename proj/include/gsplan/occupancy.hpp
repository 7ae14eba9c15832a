#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsplan/rasterizer.hpp"
#include "gsplan/scene.hpp"

namespace gsplan {

/// S^3 voxelization of the scene box; true = occupied. Cells are addressed
/// x-fastest: linear = x + S*(y + S*z).
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(const AABB& bbox, int resolution);

    const AABB& bbox() const { return bbox_; }
    int resolution() const { return s_; }
    Vec3 voxel_size() const { return voxel_; }

    /// Cell index of p, or -1 when p falls outside the box
    /// (inside means min <= p and floor((p-min)/voxel) < S per axis).
    int64_t cell_index(const Vec3& p) const;

    bool occupied(int64_t linear) const;
    void set_occupied(int64_t linear);
    size_t occupied_count() const;

    void save(const std::string& path) const;
    static OccupancyGrid load(const std::string& path);

    const std::vector<uint8_t>& raw_bits() const { return bits_; }

private:
    AABB bbox_;
    int s_ = 0;
    Vec3 voxel_ = Vec3::Zero();
    std::vector<uint8_t> bits_;  // ceil(S^3/8), LSB-first within each byte
};

/// Per-Gaussian visibility estimate: transmittance samples over all training
/// views in which the Gaussian was not culled, averaged over the top
/// min(3, available) values; 0 when culled everywhere.
std::vector<double> estimate_gaussian_visibility(const GaussianCloud& cloud,
                                                 const std::vector<View>& training_views,
                                                 const RasterParams& params = {});

/// Marks the cell containing the mean of every Gaussian with opacity >= 0.5
/// whose visibility estimate is below tau. Means outside bbox are ignored.
OccupancyGrid build_occupancy_grid(const GaussianCloud& cloud,
                                   const std::vector<double>& visibility,
                                   const AABB& bbox, int resolution, double tau = 0.5);

/// False outside the box, otherwise the containing cell's free/occupied state.
bool is_free(const OccupancyGrid& grid, const Vec3& p);

/// min over Gaussians with opacity >= opacity_min of
/// max(0, |p - mean| - max scale component); +inf when none qualify.
double min_dist_to_matter(const GaussianCloud& cloud, const Vec3& p,
                          double opacity_min = 0.5);

}  // namespace gsplan
