#pragma once

#include <random>
#include <string>
#include <vector>

#include "gsplan/occupancy.hpp"
#include "gsplan/scene.hpp"

namespace fixtures {

using Rng = std::mt19937_64;

gsplan::Gaussian make_gaussian(const gsplan::Vec3& mean, const gsplan::Vec3& scale,
                               double opacity, const gsplan::Vec3& color,
                               const Eigen::Vector4d& quat = Eigen::Vector4d(1, 0, 0, 0));

/// Means uniform in [-extent, extent]^3, lognormal scales, random rotations,
/// opacities uniform in [op_lo, op_hi] (deliberately spanning the skip
/// threshold when op_lo is small).
gsplan::GaussianCloud random_cloud(Rng& rng, int n, double extent = 1.0,
                                   double op_lo = 0.02, double op_hi = 0.99);

/// Camera at `center` aimed at `target`, roll-free against `world_up`,
/// principal point at the image center.
gsplan::View look_at_view(const gsplan::Vec3& center, const gsplan::Vec3& target,
                          int w, int h, double f, const std::string& id,
                          const gsplan::Vec3& world_up = gsplan::Vec3(0, 0, 1));

/// n cameras evenly spaced on a circle of `radius` at height z, all aimed at
/// the origin.
std::vector<gsplan::View> ring_views(int n, double radius, double z, int w, int h, double f);

/// Standard 3DGS checkpoint layout with activations inverted so the loader
/// round-trips. `with_normals` interleaves nx/ny/nz to exercise property
/// skipping.
void write_gaussian_ply(const std::string& path, const gsplan::GaussianCloud& cloud,
                        bool binary = true, bool with_normals = false);

void write_cameras_json(const std::string& path, const std::vector<gsplan::View>& views);

/// Fresh empty directory under the system temp root; wiped if it exists.
std::string temp_dir(const std::string& name);

/// Closed hollow cube: opaque wall splats on all six faces, translucent-free
/// interior fillers that no outside camera can see, and a camera rig (one
/// normal plus four slightly tilted cameras per face) that sees every wall
/// splat head-on.
struct HollowBox {
    gsplan::GaussianCloud cloud;
    std::vector<gsplan::View> cameras;
    std::vector<size_t> wall_indices;
    std::vector<size_t> filler_indices;
    double half = 1.0;        // wall planes at +-half
    double wall_scale = 0.08; // isotropic sigma of wall splats
};
HollowBox hollow_box();

/// Segment-vs-wall-shell occlusion oracle for the hollow box: a Gaussian is
/// visible iff some camera reaches its mean without marching through the
/// wall shell (samples within `exclusion` of the start are the splat's own
/// neighborhood and do not count).
bool ray_march_visible(const HollowBox& box, size_t gaussian_index);

/// Everything occupied except a one-cell tunnel along +x at (y_cell, z_cell).
gsplan::OccupancyGrid corridor_grid(const gsplan::AABB& bbox, int resolution,
                                    int y_cell, int z_cell);

/// Small scene written to disk for pipeline runs: random cloud, ring cameras
/// with rendered ground-truth images, cameras.json + PLY + config.json.
struct ToyScene {
    gsplan::GaussianCloud cloud;
    std::vector<gsplan::View> views;
    std::string dir;
    std::string ply_path;
    std::string cameras_path;
    std::string config_path;
    std::string out_dir;
};
ToyScene write_toy_scene(const std::string& name, int n_gaussians = 20, int n_cameras = 4,
                         int width = 48, int height = 48, int n_trajectories = 2,
                         int trajectory_length = 4, uint64_t rng_seed = 7);

}  // namespace fixtures
