#include "fbev/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace fbev {

double wrap_two_pi(double angle) {
    double a = std::fmod(angle, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    // fmod of a tiny negative value can round up to exactly 2*pi.
    if (a >= kTwoPi) a = 0.0;
    return a;
}

double wrap_pi(double angle) {
    double a = wrap_two_pi(angle + kPi) - kPi;
    return a;
}

Quaternion::Quaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n == 0.0) return;  // degenerate input collapses to identity
    w_ = w / n;
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n == 0.0) return {};
    const Vec3 u = axis / n;
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), u.x() * s, u.y() * s, u.z() * s};
}

Quaternion Quaternion::from_matrix(const Mat3& m) {
    // Shepperd's method: pick the largest diagonal term for stability.
    const double trace = m.trace();
    double w, x, y, z;
    if (trace > m(0, 0) && trace > m(1, 1) && trace > m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + trace);
        w = 0.25 * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        w = (m(2, 1) - m(1, 2)) / s;
        x = 0.25 * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = 0.25 * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = 0.25 * s;
    }
    return Quaternion(w, x, y, z).canonicalize();
}

Quaternion Quaternion::operator*(const Quaternion& r) const {
    return {w_ * r.w_ - x_ * r.x_ - y_ * r.y_ - z_ * r.z_,
            w_ * r.x_ + x_ * r.w_ + y_ * r.z_ - z_ * r.y_,
            w_ * r.y_ - x_ * r.z_ + y_ * r.w_ + z_ * r.x_,
            w_ * r.z_ + x_ * r.y_ - y_ * r.x_ + z_ * r.w_};
}

Quaternion Quaternion::conjugate() const {
    Quaternion q;
    q.w_ = w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
}

Quaternion Quaternion::canonicalize() const {
    if (w_ >= 0.0) return *this;
    Quaternion q;
    q.w_ = -w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
}

Vec3 Quaternion::rotate(const Vec3& v) const {
    // v' = v + 2w(u x v) + 2 u x (u x v), u = vector part
    const Vec3 u(x_, y_, z_);
    const Vec3 t = 2.0 * u.cross(v);
    return v + w_ * t + u.cross(t);
}

Mat3 Quaternion::to_matrix() const {
    Mat3 m;
    const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
    const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
    const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
    m << 1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy),
         2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
         2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy);
    return m;
}

double Quaternion::angle() const {
    const double vec = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
    return 2.0 * std::atan2(vec, std::abs(w_));
}

double Quaternion::yaw() const {
    const Vec3 fwd = rotate(Vec3::UnitX());
    return std::atan2(fwd.y(), fwd.x());
}

double Quaternion::norm() const {
    return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_);
}

Pose Pose::from_matrix_3x4(const std::array<double, 12>& r) {
    Mat3 rot;
    rot << r[0], r[1], r[2], r[4], r[5], r[6], r[8], r[9], r[10];
    return {Quaternion::from_matrix(rot), Vec3(r[3], r[7], r[11])};
}

Pose Pose::from_matrix(const Mat4& m) {
    return {Quaternion::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Pose Pose::inverse() const {
    const Quaternion inv = rotation_.conjugate();
    return {inv, -inv.rotate(translation_)};
}

Mat4 Pose::to_matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_.to_matrix();
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

Pose compose(const Pose& a, const Pose& b) {
    return {a.rotation() * b.rotation(), a.rotation().rotate(b.translation()) + a.translation()};
}

CylindricalPoint cart_to_cyl(const Vec3& p) {
    CylindricalPoint c;
    c.rho = std::hypot(p.x(), p.y());
    c.theta = (p.x() == 0.0 && p.y() == 0.0) ? 0.0 : wrap_two_pi(std::atan2(p.y(), p.x()));
    c.z = p.z();
    return c;
}

Vec3 cyl_to_cart(const CylindricalPoint& p) {
    if (p.rho == 0.0) return {0.0, 0.0, p.z};
    return {p.rho * std::cos(p.theta), p.rho * std::sin(p.theta), p.z};
}

}  // namespace fbev
