#include "fbev/camera.hpp"

#include "fbev/errors.hpp"
#include "fbev/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbev {

namespace {

const double kMinCosIncidence = std::cos(kMaxIncidenceRad);

double distort_radius(double r, double k1, double k2) {
    const double r2 = r * r;
    return r * (1.0 + k1 * r2 + k2 * r2 * r2);
}

double distort_slope(double r, double k1, double k2) {
    const double r2 = r * r;
    return 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2;
}

struct RadialSolve {
    double radius = 0.0;
    double residual = 0.0;
    int iterations = 0;
    RayStatus status = RayStatus::ok;
};

// Damped Newton on r (1 + k1 r^2 + k2 r^4) = rd, restricted to the
// monotone branch [0, fold].
RadialSolve undistort_radius(double rd, double k1, double k2) {
    RadialSolve out;
    const double fold = distortion_fold_radius(k1, k2);
    if (std::isfinite(fold) && rd > distort_radius(fold, k1, k2) + kUndistortTolerance) {
        out.status = RayStatus::outside_model;
        out.residual = rd - distort_radius(fold, k1, k2);
        return out;
    }
    double r = std::min(rd, fold);
    double res = distort_radius(r, k1, k2) - rd;
    int it = 0;
    while (std::abs(res) >= kUndistortTolerance) {
        if (it == kUndistortMaxIter) {
            out.status = RayStatus::no_convergence;
            break;
        }
        ++it;
        const double slope = distort_slope(r, k1, k2);
        if (!(slope > 0.0)) {
            out.status = RayStatus::no_convergence;
            break;
        }
        const double step = res / slope;
        double lambda = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
            double rn = r - lambda * step;
            rn = std::clamp(rn, 0.0, fold);
            const double resn = distort_radius(rn, k1, k2) - rd;
            if (std::abs(resn) < std::abs(res)) {
                r = rn;
                res = resn;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.status = RayStatus::no_convergence;
            break;
        }
    }
    out.radius = r;
    out.residual = std::abs(res);
    out.iterations = it;
    return out;
}

}  // namespace

void MeiCamera::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw ValidationError("camera '" + name + "': fx and fy must be positive");
    if (!(xi >= 0.0)) throw ValidationError("camera '" + name + "': xi must be >= 0");
    if (width <= 0 || height <= 0)
        throw ValidationError("camera '" + name + "': image size must be positive");
    if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(cx) || !std::isfinite(cy))
        throw ValidationError("camera '" + name + "': non-finite intrinsics");
}

MeiCamera MeiCamera::pinhole(double fx, double fy, double cx, double cy, int width, int height) {
    MeiCamera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = width;
    cam.height = height;
    return cam;
}

double distortion_fold_radius(double k1, double k2) {
    // d/dr [r (1 + k1 r^2 + k2 r^4)] = 1 + 3 k1 s + 5 k2 s^2, s = r^2
    constexpr double inf = std::numeric_limits<double>::infinity();
    double s = inf;
    if (k2 == 0.0) {
        if (k1 < 0.0) s = -1.0 / (3.0 * k1);
    } else {
        const double disc = 9.0 * k1 * k1 - 20.0 * k2;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double root : {(-3.0 * k1 - sq) / (10.0 * k2), (-3.0 * k1 + sq) / (10.0 * k2)})
                if (root > 0.0) s = std::min(s, root);
        }
    }
    return std::isfinite(s) ? std::sqrt(s) : inf;
}

ProjectionResult project_mei(const MeiCamera& cam, const Vec3& p) {
    const double n = p.norm();
    if (n == 0.0) throw DomainError("project_mei: point at the camera centre");

    ProjectionResult out;
    const double zs = p.z() / n;
    if (zs + cam.xi <= kDenomEpsilon || zs < kMinCosIncidence) {
        out.behind = true;
        return out;
    }
    // X_s / (Z_s + xi) == X / (Z + xi |P|); with xi = 0 this is exactly X / Z.
    const double denom = p.z() + cam.xi * n;
    const double mx = p.x() / denom;
    const double my = p.y() / denom;
    const double r2 = mx * mx + my * my;
    bool in_model = true;
    if (cam.k1 != 0.0 || cam.k2 != 0.0) {
        const double fold = distortion_fold_radius(cam.k1, cam.k2);
        in_model = r2 < fold * fold;
    }
    const double factor = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2;
    out.pixel.x() = cam.fx * (mx * factor) + cam.cx - cam.crop_offset.x();
    out.pixel.y() = cam.fy * (my * factor) + cam.cy - cam.crop_offset.y();
    out.valid = in_model && out.pixel.x() >= 0.0 && out.pixel.x() < cam.width &&
                out.pixel.y() >= 0.0 && out.pixel.y() < cam.height;
    return out;
}

UnprojectResult try_unproject_mei(const MeiCamera& cam, const Vec2& pixel) {
    if (!(pixel.x() >= 0.0 && pixel.x() < cam.width && pixel.y() >= 0.0 &&
          pixel.y() < cam.height))
        throw DomainError("unproject_mei: pixel outside the image");

    UnprojectResult out;
    const double mdx = (pixel.x() + cam.crop_offset.x() - cam.cx) / cam.fx;
    const double mdy = (pixel.y() + cam.crop_offset.y() - cam.cy) / cam.fy;
    double mx = mdx;
    double my = mdy;
    if (cam.k1 != 0.0 || cam.k2 != 0.0) {
        const double rd = std::hypot(mdx, mdy);
        const RadialSolve solve = undistort_radius(rd, cam.k1, cam.k2);
        out.residual = solve.residual;
        out.iterations = solve.iterations;
        if (solve.status != RayStatus::ok) {
            out.status = solve.status;
            return out;
        }
        if (rd > 0.0) {
            const double scale = solve.radius / rd;
            mx = mdx * scale;
            my = mdy * scale;
        }
    }

    const double r2 = mx * mx + my * my;
    const double disc = 1.0 + (1.0 - cam.xi * cam.xi) * r2;
    if (disc < 0.0) {
        out.status = RayStatus::outside_model;
        return out;
    }
    const double lift = (cam.xi + std::sqrt(disc)) / (r2 + 1.0);
    Vec3 ray(lift * mx, lift * my, lift - cam.xi);
    ray.normalize();
    if (ray.z() + cam.xi <= kDenomEpsilon) {
        out.status = RayStatus::outside_model;
        return out;
    }
    if (ray.z() < kMinCosIncidence) {
        out.status = RayStatus::beyond_hemisphere;
        return out;
    }
    out.ray = ray;
    return out;
}

Vec3 unproject_mei(const MeiCamera& cam, const Vec2& pixel) {
    const UnprojectResult r = try_unproject_mei(cam, pixel);
    switch (r.status) {
        case RayStatus::ok:
            return r.ray;
        case RayStatus::no_convergence:
            throw NoConvergenceError("unproject_mei: undistortion did not converge", r.residual);
        case RayStatus::beyond_hemisphere:
            throw DomainError("unproject_mei: ray beyond the hemisphere limit");
        case RayStatus::outside_model:
            break;
    }
    throw DomainError("unproject_mei: pixel not reachable by the camera model");
}

RayGrid generate_ray_grid(const MeiCamera& cam, int stride, const std::vector<double>& depths,
                          unsigned threads) {
    if (stride < 1) throw DomainError("generate_ray_grid: stride must be >= 1");
    if (depths.empty()) throw DomainError("generate_ray_grid: empty depth list");
    for (std::size_t i = 0; i < depths.size(); ++i) {
        if (!(depths[i] > 0.0)) throw DomainError("generate_ray_grid: depths must be positive");
        if (i > 0 && !(depths[i] > depths[i - 1]))
            throw DomainError("generate_ray_grid: depths must be strictly increasing");
    }

    RayGrid grid;
    grid.stride = stride;
    grid.depths = depths;
    grid.cols = (cam.width + stride - 1) / stride;
    grid.rows = (cam.height + stride - 1) / stride;
    const std::size_t n_pix = static_cast<std::size_t>(grid.cols) * grid.rows;
    const std::size_t n_depth = depths.size();
    grid.pixels.resize(n_pix);
    grid.valid.assign(n_pix, 0);
    grid.points.assign(n_pix * n_depth, Vec3::Zero());

    parallel_for_chunks(static_cast<std::size_t>(grid.rows), threads,
                        [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t row = row_begin; row < row_end; ++row) {
            for (int col = 0; col < grid.cols; ++col) {
                const std::size_t idx = grid.pixel_index(static_cast<int>(row), col);
                const Vec2 px(static_cast<double>(col) * stride,
                              static_cast<double>(row) * stride);
                grid.pixels[idx] = px;
                const UnprojectResult r = try_unproject_mei(cam, px);
                if (!r.ok()) continue;
                grid.valid[idx] = 1;
                for (std::size_t d = 0; d < n_depth; ++d)
                    grid.points[idx * n_depth + d] = r.ray * depths[d];
            }
        }
    });
    return grid;
}

}  // namespace fbev
