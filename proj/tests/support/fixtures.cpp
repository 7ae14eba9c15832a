#include "support/fixtures.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>

#include <json.hpp>

#include "gsplan/geometry.hpp"
#include "gsplan/image_io.hpp"
#include "gsplan/rasterizer.hpp"

namespace fs = std::filesystem;

namespace fixtures {

using namespace gsplan;

Gaussian make_gaussian(const Vec3& mean, const Vec3& scale, double opacity, const Vec3& color,
                       const Eigen::Vector4d& quat) {
    Gaussian g;
    g.mean = mean;
    g.scale = scale;
    g.opacity = opacity;
    g.color = color;
    g.rotation = quat.normalized();
    return g;
}

GaussianCloud random_cloud(Rng& rng, int n, double extent, double op_lo, double op_hi) {
    std::uniform_real_distribution<double> pos(-extent, extent);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> log_scale(-2.2, 0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> op(op_lo, op_hi);

    GaussianCloud cloud;
    cloud.gaussians.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Gaussian g;
        g.mean = Vec3(pos(rng), pos(rng), pos(rng));
        g.scale = Vec3(std::exp(log_scale(rng)), std::exp(log_scale(rng)),
                       std::exp(log_scale(rng)));
        Eigen::Vector4d q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        while (q.norm() < 1e-6) q = Eigen::Vector4d(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        g.rotation = q.normalized();
        g.opacity = op(rng);
        g.color = Vec3(unit(rng), unit(rng), unit(rng));
        cloud.gaussians.push_back(g);
    }
    return cloud;
}

View look_at_view(const Vec3& center, const Vec3& target, int w, int h, double f,
                  const std::string& id, const Vec3& world_up) {
    View v;
    v.id = id;
    v.width = w;
    v.height = h;
    v.fx = f;
    v.fy = f;
    v.cx = w / 2.0;
    v.cy = h / 2.0;
    v.rotation = look_rotation(target - center, world_up, Vec3::UnitX());
    v.set_camera_center(center);
    return v;
}

std::vector<View> ring_views(int n, double radius, double z, int w, int h, double f) {
    std::vector<View> views;
    views.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        char id[16];
        std::snprintf(id, sizeof(id), "cam_%02d", i);
        views.push_back(look_at_view(Vec3(radius * std::cos(a), radius * std::sin(a), z),
                                     Vec3::Zero(), w, h, f, id));
    }
    return views;
}

namespace {

constexpr double kShC0 = 0.28209479177387814;

float raw_opacity(double op) {
    const double p = std::min(std::max(op, 1e-6), 1.0 - 1e-6);
    return static_cast<float>(std::log(p / (1.0 - p)));
}

std::string ply_header(size_t n, bool binary, bool with_normals) {
    std::string h = "ply\nformat ";
    h += binary ? "binary_little_endian" : "ascii";
    h += " 1.0\nelement vertex " + std::to_string(n) + "\n";
    auto prop = [&](const char* name) { h += std::string("property float ") + name + "\n"; };
    prop("x");
    prop("y");
    prop("z");
    if (with_normals) {
        prop("nx");
        prop("ny");
        prop("nz");
    }
    prop("f_dc_0");
    prop("f_dc_1");
    prop("f_dc_2");
    prop("opacity");
    prop("scale_0");
    prop("scale_1");
    prop("scale_2");
    prop("rot_0");
    prop("rot_1");
    prop("rot_2");
    prop("rot_3");
    h += "end_header\n";
    return h;
}

}  // namespace

void write_gaussian_ply(const std::string& path, const GaussianCloud& cloud, bool binary,
                        bool with_normals) {
    std::ofstream out(path, std::ios::binary);
    out << ply_header(cloud.count(), binary, with_normals);
    for (const Gaussian& g : cloud.gaussians) {
        std::vector<float> row;
        for (int i = 0; i < 3; ++i) row.push_back(static_cast<float>(g.mean[i]));
        if (with_normals)
            for (int i = 0; i < 3; ++i) row.push_back(0.0f);
        for (int i = 0; i < 3; ++i)
            row.push_back(static_cast<float>((g.color[i] - 0.5) / kShC0));
        row.push_back(raw_opacity(g.opacity));
        for (int i = 0; i < 3; ++i)
            row.push_back(static_cast<float>(std::log(g.scale[i])));
        for (int i = 0; i < 4; ++i) row.push_back(static_cast<float>(g.rotation[i]));

        if (binary) {
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(float)));
        } else {
            for (size_t i = 0; i < row.size(); ++i)
                out << (i ? " " : "") << std::setprecision(9) << row[i];
            out << "\n";
        }
    }
}

void write_cameras_json(const std::string& path, const std::vector<View>& views) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const View& v : views) {
        nlohmann::ordered_json e;
        e["id"] = v.id;
        e["width"] = v.width;
        e["height"] = v.height;
        e["fx"] = v.fx;
        e["fy"] = v.fy;
        e["cx"] = v.cx;
        e["cy"] = v.cy;
        nlohmann::ordered_json rot = nlohmann::ordered_json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rot.push_back(v.rotation(r, c));
        e["rotation"] = std::move(rot);
        e["translation"] = {v.translation[0], v.translation[1], v.translation[2]};
        if (v.image_path) e["image"] = *v.image_path;
        doc.push_back(std::move(e));
    }
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

std::string temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gsplan_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

HollowBox hollow_box() {
    HollowBox box;
    const double h = box.half;
    const double pitch = 2.5 * box.wall_scale;  // 0.2: dense enough to be opaque
    const int steps = static_cast<int>(std::llround(2.0 * h / pitch));

    // One splat per unique grid node on the cube surface.
    std::set<std::array<long, 3>> seen;
    auto add_wall = [&](const Vec3& p) {
        const std::array<long, 3> key = {std::lround(p[0] * 1e6), std::lround(p[1] * 1e6),
                                         std::lround(p[2] * 1e6)};
        if (!seen.insert(key).second) return;
        box.wall_indices.push_back(box.cloud.count());
        box.cloud.gaussians.push_back(make_gaussian(p, Vec3::Constant(box.wall_scale), 0.95,
                                                    Vec3(0.8, 0.8, 0.8)));
    };
    for (int axis = 0; axis < 3; ++axis)
        for (int sign = -1; sign <= 1; sign += 2)
            for (int i = 0; i <= steps; ++i)
                for (int j = 0; j <= steps; ++j) {
                    Vec3 p;
                    p[axis] = sign * h;
                    p[(axis + 1) % 3] = -h + i * pitch;
                    p[(axis + 2) % 3] = -h + j * pitch;
                    add_wall(p);
                }

    for (int ix = -1; ix <= 1; ++ix)
        for (int iy = -1; iy <= 1; ++iy)
            for (int iz = -1; iz <= 1; ++iz) {
                box.filler_indices.push_back(box.cloud.count());
                box.cloud.gaussians.push_back(make_gaussian(Vec3(0.5 * ix, 0.5 * iy, 0.5 * iz),
                                                            Vec3::Constant(0.05), 0.9,
                                                            Vec3(0.9, 0.2, 0.2)));
            }

    // Five cameras per face: one along the normal, four tilted ~15 degrees.
    const double radius = 4.0;
    const double tilt = std::tan(15.0 * M_PI / 180.0);
    int cam_id = 0;
    for (int axis = 0; axis < 3; ++axis)
        for (int sign = -1; sign <= 1; sign += 2) {
            Vec3 n = Vec3::Zero();
            n[axis] = sign;
            Vec3 t1 = Vec3::Zero();
            t1[(axis + 1) % 3] = 1;
            Vec3 t2 = Vec3::Zero();
            t2[(axis + 2) % 3] = 1;
            const Vec3 dirs[5] = {n, (n + tilt * t1).normalized(), (n - tilt * t1).normalized(),
                                  (n + tilt * t2).normalized(), (n - tilt * t2).normalized()};
            for (const Vec3& d : dirs) {
                char id[16];
                std::snprintf(id, sizeof(id), "box_%02d", cam_id++);
                // World-up must not align with the optical axis; pick one per face.
                const Vec3 up = (axis == 2) ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
                box.cameras.push_back(
                    look_at_view(radius * d, Vec3::Zero(), 128, 128, 96.0, id, up));
            }
        }
    return box;
}

bool ray_march_visible(const HollowBox& box, size_t gaussian_index) {
    const Vec3 start = box.cloud[gaussian_index].mean;
    const double lo = box.half - 1.5 * box.wall_scale;
    const double hi = box.half + 1.5 * box.wall_scale;
    const double exclusion = 4.0 * box.wall_scale;
    const double step = box.wall_scale / 4.0;

    for (const View& cam : box.cameras) {
        const Vec3 end = cam.camera_center();
        const double len = (end - start).norm();
        const Vec3 dir = (end - start) / len;
        bool blocked = false;
        for (double d = 0.0; d <= len; d += step) {
            if (d <= exclusion) continue;
            const Vec3 q = start + d * dir;
            const double m = q.cwiseAbs().maxCoeff();
            if (m >= lo && m <= hi) {
                blocked = true;
                break;
            }
        }
        if (!blocked) return true;
    }
    return false;
}

OccupancyGrid corridor_grid(const AABB& bbox, int resolution, int y_cell, int z_cell) {
    OccupancyGrid grid(bbox, resolution);
    const int64_t s = resolution;
    for (int64_t z = 0; z < s; ++z)
        for (int64_t y = 0; y < s; ++y)
            for (int64_t x = 0; x < s; ++x)
                if (!(y == y_cell && z == z_cell))
                    grid.set_occupied(x + s * (y + s * z));
    return grid;
}

ToyScene write_toy_scene(const std::string& name, int n_gaussians, int n_cameras, int width,
                         int height, int n_trajectories, int trajectory_length,
                         uint64_t rng_seed) {
    ToyScene scene;
    scene.dir = temp_dir(name);
    Rng rng(rng_seed);
    scene.cloud = random_cloud(rng, n_gaussians, 1.0, 0.3, 0.99);
    scene.views = ring_views(n_cameras, 4.0, 1.5, width, height, 1.2 * width);

    for (View& v : scene.views) {
        const RenderOutput out = render(scene.cloud, v);
        const std::string img_name = "img_" + v.id + ".png";
        write_png(scene.dir + "/" + img_name, out.rgb);
        v.image_path = img_name;  // relative to cameras.json
    }

    scene.ply_path = scene.dir + "/scene.ply";
    scene.cameras_path = scene.dir + "/cameras.json";
    scene.config_path = scene.dir + "/config.json";
    scene.out_dir = scene.dir + "/out";
    write_gaussian_ply(scene.ply_path, scene.cloud);
    write_cameras_json(scene.cameras_path, scene.views);

    nlohmann::ordered_json cfg;
    cfg["ply"] = "scene.ply";
    cfg["cameras"] = "cameras.json";
    cfg["out_dir"] = scene.out_dir;
    cfg["planner"] = {{"n_trajectories", n_trajectories},
                      {"length", trajectory_length},
                      {"rng_seed", rng_seed}};
    std::ofstream out(scene.config_path);
    out << cfg.dump(2) << "\n";
    return scene;
}

}  // namespace fixtures
