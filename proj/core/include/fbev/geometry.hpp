#pragma once

// Rigid-body geometry shared by every module.
//
// Frame conventions (right-handed everywhere):
//   ego:    x forward, y left, z up
//   camera: z forward (optical axis), x right, y down
// A Pose maps points from its child frame into its parent frame, e.g. a
// camera's cam_to_ego pose takes camera-frame points into the ego frame.

#include <Eigen/Dense>

#include <array>
#include <numbers>

namespace fbev {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Wrap an angle into [0, 2*pi).
double wrap_two_pi(double angle);
/// Wrap an angle into [-pi, pi).
double wrap_pi(double angle);

/// Unit quaternion (w, x, y, z). Constructors normalize.
class Quaternion {
public:
    Quaternion() = default;
    Quaternion(double w, double x, double y, double z);

    static Quaternion identity() { return {}; }
    /// Rotation by `angle` radians about `axis` (need not be unit length).
    static Quaternion from_axis_angle(const Vec3& axis, double angle);
    /// Nearest rotation to a 3x3 matrix (assumed orthonormal up to rounding).
    static Quaternion from_matrix(const Mat3& m);
    static Quaternion from_yaw(double yaw) { return from_axis_angle(Vec3::UnitZ(), yaw); }

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    Quaternion operator*(const Quaternion& rhs) const;
    Quaternion conjugate() const;
    /// Representative with w >= 0 (q and -q are the same rotation).
    Quaternion canonicalize() const;

    Vec3 rotate(const Vec3& v) const;
    Mat3 to_matrix() const;
    /// Rotation angle in [0, pi].
    double angle() const;
    /// Heading about +z of the rotated x axis, in (-pi, pi].
    double yaw() const;
    double norm() const;

    std::array<double, 4> wxyz() const { return {w_, x_, y_, z_}; }

private:
    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

/// Rigid transform: p_parent = rotation * p_child + translation.
class Pose {
public:
    Pose() = default;
    Pose(const Quaternion& rotation, const Vec3& translation)
        : rotation_(rotation), translation_(translation) {}

    static Pose identity() { return {}; }
    /// From a 3x4 [R|t] row-major block (KITTI pose files).
    static Pose from_matrix_3x4(const std::array<double, 12>& rows);
    static Pose from_matrix(const Mat4& m);

    const Quaternion& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Vec3 apply(const Vec3& p) const { return rotation_.rotate(p) + translation_; }
    Pose inverse() const;
    Mat4 to_matrix() const;

private:
    Quaternion rotation_;
    Vec3 translation_ = Vec3::Zero();
};

/// a∘b: applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

struct CylindricalPoint {
    double rho = 0.0;    // meters, >= 0
    double theta = 0.0;  // radians, [0, 2*pi)
    double z = 0.0;      // meters
};

/// theta = atan2(y, x) wrapped to [0, 2*pi); the origin maps to theta = 0.
CylindricalPoint cart_to_cyl(const Vec3& p);
Vec3 cyl_to_cart(const CylindricalPoint& p);

}  // namespace fbev
