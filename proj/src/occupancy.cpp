#include "gsplan/occupancy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "gsplan/errors.hpp"

namespace gsplan {

namespace {

constexpr char kMagic[4] = {'O', 'G', 'R', 'D'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError(std::string("occupancy grid: truncated ") + what);
    return v;
}

}  // namespace

OccupancyGrid::OccupancyGrid(const AABB& bbox, int resolution) : bbox_(bbox), s_(resolution) {
    if (resolution <= 0) throw PreconditionError("occupancy grid: resolution must be positive");
    const Vec3 extent = bbox.extent();
    if (!(extent.minCoeff() > 0))
        throw PreconditionError("occupancy grid: bbox must have positive extent");
    voxel_ = extent / static_cast<double>(resolution);
    const size_t n_cells = static_cast<size_t>(s_) * s_ * s_;
    bits_.assign((n_cells + 7) / 8, 0);
}

int64_t OccupancyGrid::cell_index(const Vec3& p) const {
    int64_t coord[3];
    for (int a = 0; a < 3; ++a) {
        if (p[a] < bbox_.min[a]) return -1;
        const int64_t c = static_cast<int64_t>(std::floor((p[a] - bbox_.min[a]) / voxel_[a]));
        if (c < 0 || c >= s_) return -1;
        coord[a] = c;
    }
    return coord[0] + static_cast<int64_t>(s_) * (coord[1] + static_cast<int64_t>(s_) * coord[2]);
}

bool OccupancyGrid::occupied(int64_t linear) const {
    return (bits_[linear >> 3] >> (linear & 7)) & 1;
}

void OccupancyGrid::set_occupied(int64_t linear) {
    bits_[linear >> 3] |= static_cast<uint8_t>(1u << (linear & 7));
}

size_t OccupancyGrid::occupied_count() const {
    size_t n = 0;
    for (uint8_t b : bits_) n += std::popcount(b);
    return n;
}

void OccupancyGrid::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<uint32_t>(s_));
    for (int a = 0; a < 3; ++a) write_pod(os, bbox_.min[a]);
    for (int a = 0; a < 3; ++a) write_pod(os, bbox_.max[a]);
    os.write(reinterpret_cast<const char*>(bits_.data()),
             static_cast<std::streamsize>(bits_.size()));
    if (!os) throw IoError("write failed: " + path);
}

OccupancyGrid OccupancyGrid::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("occupancy grid: bad magic in " + path);
    const uint32_t version = read_pod<uint32_t>(is, "version");
    if (version != kVersion)
        throw FormatError("occupancy grid: unsupported version " + std::to_string(version));
    const uint32_t s = read_pod<uint32_t>(is, "resolution");
    if (s == 0) throw FormatError("occupancy grid: zero resolution");
    AABB bbox;
    for (int a = 0; a < 3; ++a) bbox.min[a] = read_pod<double>(is, "bbox");
    for (int a = 0; a < 3; ++a) bbox.max[a] = read_pod<double>(is, "bbox");
    OccupancyGrid grid(bbox, static_cast<int>(s));
    is.read(reinterpret_cast<char*>(grid.bits_.data()),
            static_cast<std::streamsize>(grid.bits_.size()));
    if (!is) throw FormatError("occupancy grid: truncated bit payload in " + path);
    return grid;
}

std::vector<double> estimate_gaussian_visibility(const GaussianCloud& cloud,
                                                 const std::vector<View>& training_views,
                                                 const RasterParams& params) {
    if (training_views.empty())
        throw PreconditionError("estimate_gaussian_visibility: no training views");
    const size_t n = cloud.count();
    // Per Gaussian, the three largest transmittance samples seen so far.
    std::vector<std::array<double, 3>> top(n, {-1.0, -1.0, -1.0});

    for (const View& view : training_views) {
        const VisibilityRecord rec = per_gaussian_visibility(cloud, view, params);
        for (size_t i = 0; i < n; ++i) {
            if (rec.culled[i]) continue;
            double t = rec.transmittance[i];
            auto& best = top[i];
            for (int k = 0; k < 3; ++k) {
                if (t > best[k]) std::swap(t, best[k]);
            }
        }
    }

    std::vector<double> visibility(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double sum = 0;
        int count = 0;
        for (double v : top[i]) {
            if (v >= 0) {
                sum += v;
                ++count;
            }
        }
        if (count > 0) visibility[i] = sum / count;
    }
    return visibility;
}

OccupancyGrid build_occupancy_grid(const GaussianCloud& cloud,
                                   const std::vector<double>& visibility, const AABB& bbox,
                                   int resolution, double tau) {
    if (visibility.size() != cloud.count())
        throw PreconditionError("build_occupancy_grid: visibility size mismatch");
    if (resolution < 2) throw PreconditionError("build_occupancy_grid: resolution must be >= 2");
    if (!(tau > 0 && tau < 1)) throw PreconditionError("build_occupancy_grid: tau must be in (0,1)");
    OccupancyGrid grid(bbox, resolution);
    for (uint32_t i = 0; i < cloud.count(); ++i) {
        if (cloud[i].opacity < 0.5) continue;
        if (visibility[i] >= tau) continue;
        const int64_t cell = grid.cell_index(cloud[i].mean);
        if (cell >= 0) grid.set_occupied(cell);
    }
    return grid;
}

bool is_free(const OccupancyGrid& grid, const Vec3& p) {
    const int64_t cell = grid.cell_index(p);
    return cell >= 0 && !grid.occupied(cell);
}

double min_dist_to_matter(const GaussianCloud& cloud, const Vec3& p, double opacity_min) {
    double best = std::numeric_limits<double>::infinity();
    for (uint32_t i = 0; i < cloud.count(); ++i) {
        const Gaussian& g = cloud[i];
        if (g.opacity < opacity_min) continue;
        const double d = (p - g.mean).norm() - g.scale.maxCoeff();
        best = std::min(best, std::max(0.0, d));
    }
    return best;
}

}  // namespace gsplan
