#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsplan/rasterizer.hpp"
#include "gsplan/scene.hpp"

namespace gsplan {

/// Equiangular sphere partition: n_azimuth bins over atan2, n_elevation bins
/// over asin, poles clamped into the boundary elevation rings.
struct DirectionBinning {
    int n_azimuth = 8;
    int n_elevation = 4;

    int n_directions() const { return n_azimuth * n_elevation; }
};

/// Bin of the direction the Gaussian is seen from (gaussian -> camera).
int direction_bin(const DirectionBinning& binning, const Vec3& gaussian_mean,
                  const Vec3& camera_center);

/// Binary (gaussian, direction-bin) observation matrix. Bits are only ever
/// set, never cleared; dimensions are fixed at construction.
class CoverageMap {
public:
    CoverageMap() = default;
    CoverageMap(size_t n_gaussians, int n_directions);

    size_t n_gaussians() const { return n_gaussians_; }
    int n_directions() const { return n_directions_; }

    bool test(size_t gaussian, int bin) const;
    /// Returns true when the bit was newly set.
    bool set(size_t gaussian, int bin);

    uint64_t popcount() const;

    void save(const std::string& path) const;
    static CoverageMap load(const std::string& path);

private:
    size_t n_gaussians_ = 0;
    int n_directions_ = 0;
    size_t words_per_row_ = 0;
    std::vector<uint64_t> words_;
};

/// All-zero map, then every training view applied once.
CoverageMap init_coverage(const GaussianCloud& cloud, const std::vector<View>& training_views,
                          const DirectionBinning& binning, double eps_vis = 0.05,
                          const RasterParams& params = {});

/// Direction bins for a set of visible Gaussians seen from camera_center.
std::vector<int> direction_bins_for(const GaussianCloud& cloud,
                                    const std::vector<uint32_t>& visible,
                                    const Vec3& camera_center,
                                    const DirectionBinning& binning);

/// Number of (gaussian, bin) pairs the candidate would newly cover. Pure.
uint64_t info_gain(const CoverageMap& map, const GaussianCloud& cloud, const View& candidate,
                   const DirectionBinning& binning, double eps_vis = 0.05,
                   const RasterParams& params = {});

/// Sets the candidate's pairs; returns the realized gain (equal to the
/// info_gain evaluated immediately before on the same map).
uint64_t apply_view(CoverageMap& map, const GaussianCloud& cloud, const View& view,
                    const DirectionBinning& binning, double eps_vis = 0.05,
                    const RasterParams& params = {});

/// Precomputed-index variants used by the planner's inner loop.
uint64_t info_gain_indexed(const CoverageMap& map, const std::vector<uint32_t>& visible,
                           const std::vector<int>& bins);
uint64_t apply_view_indexed(CoverageMap& map, const std::vector<uint32_t>& visible,
                            const std::vector<int>& bins);

}  // namespace gsplan
