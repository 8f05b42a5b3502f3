#pragma once

// Unified (MEI) central camera model.
//
// Projection chain for a camera-frame point P:
//   P_s = P / |P|                               unit sphere
//   m   = (X_s, Y_s) / (Z_s + xi)               mirror-shifted perspective
//   m_d = (1 + k1 r^2 + k2 r^4) m, r = |m|      radial distortion
//   p   = K m_d - crop_offset                   pixels in the cropped image
// With xi = 0 and k1 = k2 = 0 this is bit-identical to pinhole projection.

#include "fbev/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fbev {

struct MeiCamera {
    std::string name;
    double xi = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;   // cropped image size
    int height = 1;
    Vec2 crop_offset = Vec2::Zero();  // (u0, v0) subtracted after K

    bool is_pinhole() const { return xi == 0.0 && k1 == 0.0 && k2 == 0.0; }
    /// Throws ValidationError on fx/fy <= 0, xi < 0 or empty image.
    void validate() const;

    static MeiCamera pinhole(double fx, double fy, double cx, double cy, int width, int height);
};

/// Denominator guard for Z_s + xi.
inline constexpr double kDenomEpsilon = 1e-8;
/// Maximum accepted incidence angle (90 degrees plus a 5 degree margin).
inline constexpr double kMaxIncidenceRad = deg_to_rad(95.0);
/// Undistortion stopping rule.
inline constexpr int kUndistortMaxIter = 20;
inline constexpr double kUndistortTolerance = 1e-10;

struct ProjectionResult {
    Vec2 pixel = Vec2::Zero();
    bool valid = false;   // projectable and inside the cropped image
    bool behind = false;  // outside the projectable hemisphere
};

/// Full MEI projection. Throws DomainError when |P| == 0.
ProjectionResult project_mei(const MeiCamera& cam, const Vec3& p);

enum class RayStatus : std::uint8_t {
    ok,
    outside_model,      // pixel not reachable by any in-model ray
    beyond_hemisphere,  // ray exists but exceeds the incidence limit
    no_convergence,     // radial undistortion did not converge
};

struct UnprojectResult {
    Vec3 ray = Vec3::UnitZ();  // unit direction, camera frame
    RayStatus status = RayStatus::ok;
    double residual = 0.0;     // final radial residual of the undistortion
    int iterations = 0;

    bool ok() const { return status == RayStatus::ok; }
};

/// Inverse MEI model without throwing; the status says whether the ray is usable.
/// Throws DomainError only for pixels outside the cropped image.
UnprojectResult try_unproject_mei(const MeiCamera& cam, const Vec2& pixel);

/// Unit ray for a pixel. Throws NoConvergenceError when undistortion
/// diverges and DomainError for other unusable pixels.
Vec3 unproject_mei(const MeiCamera& cam, const Vec2& pixel);

/// Smallest positive undistorted radius where r(1 + k1 r^2 + k2 r^4) stops
/// increasing; +inf if it never does.
double distortion_fold_radius(double k1, double k2);

/// Lifted frustum points R(u, v, d) = ray(u, v) * d.
struct RayGrid {
    int cols = 0;  // sampled pixels per row
    int rows = 0;
    int stride = 1;
    std::vector<double> depths;
    std::vector<Vec2> pixels;         // rows * cols, row-major over (v, u)
    std::vector<std::uint8_t> valid;  // per sampled pixel
    std::vector<Vec3> points;         // rows * cols * depths, camera frame

    std::size_t pixel_index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
               static_cast<std::size_t>(col);
    }
    const Vec3& point(std::size_t pixel, std::size_t depth) const {
        return points[pixel * depths.size() + depth];
    }
};

/// Samples pixels (i*stride, j*stride) inside the image. Invalid rays still
/// occupy their slot (points set to zero) so the layout stays dense.
RayGrid generate_ray_grid(const MeiCamera& cam, int stride, const std::vector<double>& depths,
                          unsigned threads = 0);

}  // namespace fbev
