#pragma once

#include "fbev/geometry.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace fbev {

enum class GridMode { cartesian, polar };

/// BEV rasterization. Polar bins partition [0, rho_max) x [0, 2*pi) into
/// n_theta x n_rho cells; Cartesian bins partition [x_min, x_max) x
/// [y_min, y_max). Points outside [z_min, z_max) are not splatted.
struct BevGrid {
    GridMode mode = GridMode::polar;
    // polar
    double rho_max = 0.0;
    int n_theta = 0;
    int n_rho = 0;
    // cartesian
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    int nx = 0, ny = 0;
    // both
    double z_min = 0.0;
    double z_max = 0.0;

    static BevGrid polar(double rho_max, int n_theta, int n_rho, double z_min, double z_max);
    static BevGrid cartesian(double x_min, double x_max, int nx, double y_min, double y_max, int ny,
                             double z_min, double z_max);

    /// Throws ValidationError when the invariants do not hold.
    void validate() const;
    bool is_polar() const { return mode == GridMode::polar; }
    std::size_t bin_count() const;
    /// (n_theta, n_rho) for polar grids, (ny, nx) for Cartesian ones.
    std::array<std::size_t, 2> dims() const;
};

struct PolarBin {
    int theta_idx = 0;
    int rho_idx = 0;
};

/// floor(theta / (2*pi/N_theta)), floor(rho / (rho_max/N_rho)); nullopt when
/// rho >= rho_max. theta is wrapped first and never yields N_theta.
std::optional<PolarBin> bin_index(const CylindricalPoint& p, const BevGrid& grid);

/// Centre of a polar bin (z = middle of the slab).
CylindricalPoint bin_center(const PolarBin& bin, const BevGrid& grid);

struct CartesianBin {
    int ix = 0;
    int iy = 0;
};

std::optional<CartesianBin> cartesian_bin_index(const Vec3& p, const BevGrid& grid);

/// Flat bin id (polar: theta-major, cartesian: row = y) or nullopt when the
/// point falls outside the grid or the z slab.
std::optional<std::size_t> flat_bin(const Vec3& p, const BevGrid& grid);

struct PolarEncoding {
    std::array<double, 4> v{};  // sin(theta), cos(theta), rho / rho_max, z_norm
    bool clamped = false;       // rho or z was outside the grid and clamped

    double sin_theta() const { return v[0]; }
    double cos_theta() const { return v[1]; }
    double rho_norm() const { return v[2]; }
    double z_norm() const { return v[3]; }
};

/// Wrap-safe polar position encoding. Throws DomainError for a non-polar grid
/// or a zero-height z slab.
PolarEncoding encode_polar(const Vec3& p, const BevGrid& grid);

/// n_theta beams at (j + 1/2) * 2*pi / n_theta, n_per_beam anchors per beam at
/// radii (i + 1/2) * rho_max / n_per_beam, beam-major. z is the slab middle.
std::vector<CylindricalPoint> polar_anchor_grid(const BevGrid& grid, int n_per_beam);

}  // namespace fbev
