#include "fbev/polar_bev.hpp"

#include "fbev/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fbev {

BevGrid BevGrid::polar(double rho_max, int n_theta, int n_rho, double z_min, double z_max) {
    BevGrid g;
    g.mode = GridMode::polar;
    g.rho_max = rho_max;
    g.n_theta = n_theta;
    g.n_rho = n_rho;
    g.z_min = z_min;
    g.z_max = z_max;
    g.validate();
    return g;
}

BevGrid BevGrid::cartesian(double x_min, double x_max, int nx, double y_min, double y_max, int ny,
                           double z_min, double z_max) {
    BevGrid g;
    g.mode = GridMode::cartesian;
    g.x_min = x_min;
    g.x_max = x_max;
    g.nx = nx;
    g.y_min = y_min;
    g.y_max = y_max;
    g.ny = ny;
    g.z_min = z_min;
    g.z_max = z_max;
    g.validate();
    return g;
}

void BevGrid::validate() const {
    if (!(z_max >= z_min)) throw ValidationError("bev grid: z_max must be >= z_min");
    if (mode == GridMode::polar) {
        if (n_theta < 4) throw ValidationError("bev grid: n_theta must be >= 4");
        if (n_rho < 1) throw ValidationError("bev grid: n_rho must be >= 1");
        if (!(rho_max > 0.0)) throw ValidationError("bev grid: rho_max must be > 0");
    } else {
        if (nx < 1 || ny < 1) throw ValidationError("bev grid: nx and ny must be >= 1");
        if (!(x_max > x_min) || !(y_max > y_min))
            throw ValidationError("bev grid: empty x or y range");
    }
}

std::size_t BevGrid::bin_count() const {
    const auto d = dims();
    return d[0] * d[1];
}

std::array<std::size_t, 2> BevGrid::dims() const {
    if (mode == GridMode::polar)
        return {static_cast<std::size_t>(n_theta), static_cast<std::size_t>(n_rho)};
    return {static_cast<std::size_t>(ny), static_cast<std::size_t>(nx)};
}

std::optional<PolarBin> bin_index(const CylindricalPoint& p, const BevGrid& grid) {
    if (!(p.rho >= 0.0) || !(p.rho < grid.rho_max)) return std::nullopt;
    const double theta = wrap_two_pi(p.theta);
    PolarBin b;
    b.theta_idx = std::min(static_cast<int>(std::floor(theta / (kTwoPi / grid.n_theta))),
                           grid.n_theta - 1);
    b.rho_idx = std::min(static_cast<int>(std::floor(p.rho / (grid.rho_max / grid.n_rho))),
                         grid.n_rho - 1);
    return b;
}

CylindricalPoint bin_center(const PolarBin& bin, const BevGrid& grid) {
    CylindricalPoint c;
    c.theta = (bin.theta_idx + 0.5) * (kTwoPi / grid.n_theta);
    c.rho = (bin.rho_idx + 0.5) * (grid.rho_max / grid.n_rho);
    c.z = 0.5 * (grid.z_min + grid.z_max);
    return c;
}

std::optional<CartesianBin> cartesian_bin_index(const Vec3& p, const BevGrid& grid) {
    if (!(p.x() >= grid.x_min && p.x() < grid.x_max && p.y() >= grid.y_min && p.y() < grid.y_max))
        return std::nullopt;
    CartesianBin b;
    b.ix = std::min(static_cast<int>(std::floor((p.x() - grid.x_min) / ((grid.x_max - grid.x_min) / grid.nx))),
                    grid.nx - 1);
    b.iy = std::min(static_cast<int>(std::floor((p.y() - grid.y_min) / ((grid.y_max - grid.y_min) / grid.ny))),
                    grid.ny - 1);
    return b;
}

std::optional<std::size_t> flat_bin(const Vec3& p, const BevGrid& grid) {
    if (!(p.z() >= grid.z_min && p.z() < grid.z_max)) return std::nullopt;
    if (grid.is_polar()) {
        const auto b = bin_index(cart_to_cyl(p), grid);
        if (!b) return std::nullopt;
        return static_cast<std::size_t>(b->theta_idx) * static_cast<std::size_t>(grid.n_rho) +
               static_cast<std::size_t>(b->rho_idx);
    }
    const auto b = cartesian_bin_index(p, grid);
    if (!b) return std::nullopt;
    return static_cast<std::size_t>(b->iy) * static_cast<std::size_t>(grid.nx) +
           static_cast<std::size_t>(b->ix);
}

PolarEncoding encode_polar(const Vec3& p, const BevGrid& grid) {
    if (!grid.is_polar()) throw DomainError("encode_polar: grid is not polar");
    const double height = grid.z_max - grid.z_min;
    if (!(height > 0.0)) throw DomainError("encode_polar: zero-height z slab");

    PolarEncoding e;
    const double rho = std::hypot(p.x(), p.y());
    if (rho > 0.0) {
        e.v[0] = p.y() / rho;
        e.v[1] = p.x() / rho;
    } else {
        e.v[0] = 0.0;  // theta = 0 at the origin
        e.v[1] = 1.0;
    }
    double rho_norm = rho / grid.rho_max;
    if (rho_norm > 1.0) {
        rho_norm = 1.0;
        e.clamped = true;
    }
    double z_norm = (p.z() - grid.z_min) / height;
    if (z_norm < 0.0 || z_norm > 1.0) {
        z_norm = std::clamp(z_norm, 0.0, 1.0);
        e.clamped = true;
    }
    e.v[2] = rho_norm;
    e.v[3] = z_norm;
    return e;
}

std::vector<CylindricalPoint> polar_anchor_grid(const BevGrid& grid, int n_per_beam) {
    if (!grid.is_polar()) throw DomainError("polar_anchor_grid: grid is not polar");
    if (n_per_beam < 1) throw DomainError("polar_anchor_grid: n_per_beam must be >= 1");
    std::vector<CylindricalPoint> out;
    out.reserve(static_cast<std::size_t>(grid.n_theta) * static_cast<std::size_t>(n_per_beam));
    const double z_mid = 0.5 * (grid.z_min + grid.z_max);
    for (int j = 0; j < grid.n_theta; ++j) {
        const double theta = (j + 0.5) * kTwoPi / grid.n_theta;
        for (int i = 0; i < n_per_beam; ++i)
            out.push_back({(i + 0.5) * grid.rho_max / n_per_beam, theta, z_mid});
    }
    return out;
}

}  // namespace fbev
