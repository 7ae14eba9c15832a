#include "gsplan/coverage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "gsplan/errors.hpp"

namespace gsplan {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'A', 'P'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError(std::string("coverage map: truncated ") + what);
    return v;
}

}  // namespace

int direction_bin(const DirectionBinning& binning, const Vec3& gaussian_mean,
                  const Vec3& camera_center) {
    const Vec3 d = camera_center - gaussian_mean;
    const double norm = d.norm();
    if (!(norm > 0)) throw PreconditionError("direction_bin: camera coincides with gaussian");
    const Vec3 u = d / norm;

    constexpr double pi = std::numbers::pi;
    int az = static_cast<int>(
        std::floor(binning.n_azimuth * (std::atan2(u.y(), u.x()) + pi) / (2.0 * pi)));
    if (az >= binning.n_azimuth) az = 0;  // atan2 == +pi wraps to the first bin
    if (az < 0) az = 0;

    const double el_angle = std::asin(std::clamp(u.z(), -1.0, 1.0));
    int el = static_cast<int>(std::floor(binning.n_elevation * (el_angle + 0.5 * pi) / pi));
    el = std::clamp(el, 0, binning.n_elevation - 1);

    return az * binning.n_elevation + el;
}

CoverageMap::CoverageMap(size_t n_gaussians, int n_directions)
    : n_gaussians_(n_gaussians), n_directions_(n_directions) {
    if (n_directions <= 0) throw PreconditionError("coverage map: n_directions must be positive");
    words_per_row_ = (static_cast<size_t>(n_directions) + 63) / 64;
    words_.assign(n_gaussians_ * words_per_row_, 0);
}

bool CoverageMap::test(size_t gaussian, int bin) const {
    const uint64_t word = words_[gaussian * words_per_row_ + (bin >> 6)];
    return (word >> (bin & 63)) & 1;
}

bool CoverageMap::set(size_t gaussian, int bin) {
    uint64_t& word = words_[gaussian * words_per_row_ + (bin >> 6)];
    const uint64_t mask = 1ull << (bin & 63);
    if (word & mask) return false;
    word |= mask;
    return true;
}

uint64_t CoverageMap::popcount() const {
    uint64_t n = 0;
    for (uint64_t w : words_) n += std::popcount(w);
    return n;
}

void CoverageMap::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_pod(os, static_cast<uint64_t>(n_gaussians_));
    write_pod(os, static_cast<uint32_t>(n_directions_));
    // Row-major bit rows, each padded to the byte: bit k of row g is byte
    // k/8, LSB-first.
    const size_t row_bytes = (static_cast<size_t>(n_directions_) + 7) / 8;
    std::vector<uint8_t> row(row_bytes);
    for (size_t g = 0; g < n_gaussians_; ++g) {
        std::fill(row.begin(), row.end(), 0);
        for (int k = 0; k < n_directions_; ++k)
            if (test(g, k)) row[k >> 3] |= static_cast<uint8_t>(1u << (k & 7));
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row_bytes));
    }
    if (!os) throw IoError("write failed: " + path);
}

CoverageMap CoverageMap::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("coverage map: bad magic in " + path);
    const uint64_t n_gaussians = read_pod<uint64_t>(is, "row count");
    const uint32_t n_directions = read_pod<uint32_t>(is, "direction count");
    if (n_directions == 0) throw FormatError("coverage map: zero directions");
    CoverageMap map(n_gaussians, static_cast<int>(n_directions));
    const size_t row_bytes = (static_cast<size_t>(n_directions) + 7) / 8;
    std::vector<uint8_t> row(row_bytes);
    for (size_t g = 0; g < n_gaussians; ++g) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_bytes));
        if (!is) throw FormatError("coverage map: truncated bit payload in " + path);
        for (uint32_t k = 0; k < n_directions; ++k)
            if ((row[k >> 3] >> (k & 7)) & 1) map.set(g, static_cast<int>(k));
    }
    return map;
}

std::vector<int> direction_bins_for(const GaussianCloud& cloud,
                                    const std::vector<uint32_t>& visible,
                                    const Vec3& camera_center, const DirectionBinning& binning) {
    std::vector<int> bins;
    bins.reserve(visible.size());
    for (uint32_t g : visible) bins.push_back(direction_bin(binning, cloud[g].mean, camera_center));
    return bins;
}

uint64_t info_gain_indexed(const CoverageMap& map, const std::vector<uint32_t>& visible,
                           const std::vector<int>& bins) {
    uint64_t gain = 0;
    for (size_t i = 0; i < visible.size(); ++i)
        if (!map.test(visible[i], bins[i])) ++gain;
    return gain;
}

uint64_t apply_view_indexed(CoverageMap& map, const std::vector<uint32_t>& visible,
                            const std::vector<int>& bins) {
    uint64_t gain = 0;
    for (size_t i = 0; i < visible.size(); ++i)
        if (map.set(visible[i], bins[i])) ++gain;
    return gain;
}

namespace {

void require_matching_dims(const CoverageMap& map, const GaussianCloud& cloud,
                           const DirectionBinning& binning) {
    if (map.n_gaussians() != cloud.count() || map.n_directions() != binning.n_directions())
        throw PreconditionError("coverage: map dimensions do not match the cloud/binning");
}

}  // namespace

uint64_t info_gain(const CoverageMap& map, const GaussianCloud& cloud, const View& candidate,
                   const DirectionBinning& binning, double eps_vis, const RasterParams& params) {
    require_matching_dims(map, cloud, binning);
    const std::vector<uint32_t> visible = visible_set(cloud, candidate, eps_vis, params);
    const std::vector<int> bins =
        direction_bins_for(cloud, visible, candidate.camera_center(), binning);
    return info_gain_indexed(map, visible, bins);
}

uint64_t apply_view(CoverageMap& map, const GaussianCloud& cloud, const View& view,
                    const DirectionBinning& binning, double eps_vis, const RasterParams& params) {
    require_matching_dims(map, cloud, binning);
    const std::vector<uint32_t> visible = visible_set(cloud, view, eps_vis, params);
    const std::vector<int> bins = direction_bins_for(cloud, visible, view.camera_center(), binning);
    return apply_view_indexed(map, visible, bins);
}

CoverageMap init_coverage(const GaussianCloud& cloud, const std::vector<View>& training_views,
                          const DirectionBinning& binning, double eps_vis,
                          const RasterParams& params) {
    CoverageMap map(cloud.count(), binning.n_directions());
    for (const View& view : training_views) apply_view(map, cloud, view, binning, eps_vis, params);
    return map;
}

}  // namespace gsplan
