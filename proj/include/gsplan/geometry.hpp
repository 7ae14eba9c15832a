#pragma once

#include <Eigen/Dense>

namespace gsplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rotation matrix from a (not necessarily normalized) quaternion given as (w,x,y,z).
inline Mat3 quat_to_rotation(double w, double x, double y, double z) {
    Quat q(w, x, y, z);
    q.normalize();
    return q.toRotationMatrix();
}

/// Rodrigues rotation of `v` about unit `axis` by `angle` radians.
inline Vec3 rotate_about_axis(const Vec3& v, const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()) * v;
}

/// World-to-camera rotation for a camera at `center` looking along unit
/// `forward`, roll-free with respect to `world_up`. Falls back to
/// `fallback_right` when forward is (anti)parallel to world_up.
/// Camera frame convention: +x right, +y down, +z forward (rows of R).
inline Mat3 look_rotation(const Vec3& forward, const Vec3& world_up, const Vec3& fallback_right) {
    const Vec3 f = forward.normalized();
    Vec3 r = f.cross(world_up);
    if (r.norm() < 1e-9) {
        r = fallback_right - fallback_right.dot(f) * f;
        if (r.norm() < 1e-9) {
            // forward happens to align with the fallback too; pick any perpendicular
            r = f.cross(Vec3::UnitX());
            if (r.norm() < 1e-9) r = f.cross(Vec3::UnitY());
        }
    }
    r.normalize();
    const Vec3 d = f.cross(r).normalized();  // camera-down
    Mat3 rot;
    rot.row(0) = r.transpose();
    rot.row(1) = d.transpose();
    rot.row(2) = f.transpose();
    return rot;
}

}  // namespace gsplan
