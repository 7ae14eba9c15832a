#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsplan/geometry.hpp"
#include "gsplan/image.hpp"

namespace gsplan {

/// One splat with activations already applied (exp scales, sigmoid opacity,
/// SH degree-0 color). Quaternion stored normalized as (w,x,y,z).
struct Gaussian {
    Vec3 mean = Vec3::Zero();
    Vec3 scale = Vec3::Ones();
    Eigen::Vector4d rotation{1, 0, 0, 0};
    double opacity = 1.0;
    Vec3 color = Vec3::Ones();

    Mat3 rotation_matrix() const {
        return quat_to_rotation(rotation[0], rotation[1], rotation[2], rotation[3]);
    }
};

/// Indices 0..count()-1 are stable identifiers for a pipeline run.
struct GaussianCloud {
    std::vector<Gaussian> gaussians;

    size_t count() const { return gaussians.size(); }
    const Gaussian& operator[](size_t i) const { return gaussians[i]; }
    Gaussian& operator[](size_t i) { return gaussians[i]; }
};

enum class ViewKind { training, virtual_ };

/// Pinhole camera: world-to-camera rigid transform (x_cam = R x_world + t),
/// camera frame +x right / +y down / +z forward.
struct View {
    std::string id;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    ViewKind kind = ViewKind::training;
    std::optional<Image> image;          // ground truth for training views
    std::optional<std::string> image_path;
    std::optional<Vec3> look_at;         // planner state

    Vec3 camera_center() const { return -rotation.transpose() * translation; }
    Vec3 forward_axis() const { return rotation.row(2).transpose(); }
    Vec3 right_axis() const { return rotation.row(0).transpose(); }
    Vec3 up_axis() const { return -rotation.row(1).transpose(); }

    /// Repositions the camera, keeping orientation.
    void set_camera_center(const Vec3& c) { translation = -rotation * c; }

    void validate() const;
};

struct AABB {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    Vec3 extent() const { return max - min; }
    double diagonal() const { return extent().norm(); }
    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

/// Robust scene bounds: per-axis [lo_pct, hi_pct] percentile box of Gaussian
/// means (linear-interpolated order statistics), united with all camera
/// centers, degenerate edges inflated to 1e-3, then expanded by
/// margin * diagonal on every side.
AABB compute_scene_bbox(const GaussianCloud& cloud, const std::vector<View>& views,
                        double lo_pct = 0.01, double hi_pct = 0.99, double margin = 0.05);

}  // namespace gsplan
