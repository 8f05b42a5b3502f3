#pragma once

// Deterministic geometric cores of three view-transformation styles:
//   - frustum lifting and BEV splatting (depth-based forward projection),
//   - reference-point projection for BEV queries (backward projection),
//   - 3D position-encoding inputs for projection-free detectors.
// All of them go through the MEI model, so fisheye rays bend correctly.

#include "fbev/camera.hpp"
#include "fbev/geometry.hpp"
#include "fbev/polar_bev.hpp"

#include <cstdint>
#include <vector>

namespace fbev {

/// Per-pixel feature vectors on a strided pixel grid (rows x cols x channels).
struct FeatureImage {
    int rows = 0;
    int cols = 0;
    int channels = 0;
    std::vector<double> data;

    const double* at(int row, int col) const {
        return data.data() + (static_cast<std::size_t>(row) * cols + col) * channels;
    }
};

/// Lifted points in the ego frame with their features.
class FeatureCloud {
public:
    FeatureCloud() = default;
    explicit FeatureCloud(int channels);

    int channels() const { return channels_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    /// Throws DomainError when the feature length differs from channels().
    void add(const Vec3& point, const double* feature, std::size_t length, std::int32_t camera_id);
    void add(const Vec3& point, const std::vector<double>& feature, std::int32_t camera_id) {
        add(point, feature.data(), feature.size(), camera_id);
    }
    /// Appends all points of another cloud with the same channel count.
    void append(const FeatureCloud& other);

    const Vec3& point(std::size_t i) const { return points_[i]; }
    const double* feature(std::size_t i) const {
        return features_.data() + i * static_cast<std::size_t>(channels_);
    }
    std::int32_t camera_id(std::size_t i) const { return camera_ids_[i]; }

private:
    int channels_ = 0;
    std::vector<Vec3> points_;
    std::vector<double> features_;
    std::vector<std::int32_t> camera_ids_;
};

/// C x (n_theta x n_rho) or C x (ny x nx) sum-pooled features.
struct BevFeatureMap {
    BevGrid grid;
    int channels = 0;
    std::vector<double> data;       // channel-major
    std::size_t points_in_range = 0;

    std::size_t bins() const { return grid.bin_count(); }
    double at(int channel, std::size_t bin) const {
        return data[static_cast<std::size_t>(channel) * bins() + bin];
    }
};

/// Uniform depth candidates: `count` values from `near` to `far` inclusive.
/// The default (64 over [1, 61] m) applies when nothing is configured.
std::vector<double> uniform_depths(double near = 1.0, double far = 61.0, int count = 64);

/// Rays through the strided pixel grid times each depth, moved into the ego
/// frame by cam_to_ego. Pixels with unusable rays are omitted. The feature
/// image must be ceil(height/stride) x ceil(width/stride). Throws DomainError
/// on a shape mismatch.
FeatureCloud lift_frustum(const MeiCamera& cam, const Pose& cam_to_ego, int stride,
                          const std::vector<double>& depths, const FeatureImage& features,
                          std::int32_t camera_id = 0, unsigned threads = 0);

/// Sum-pools each point's feature into its bin. Points outside the grid or the
/// z slab are dropped. Per-bin sums are exact-then-rounded, so the output is
/// bitwise independent of point order and thread count.
BevFeatureMap splat(const FeatureCloud& cloud, const BevGrid& grid, unsigned threads = 0);

struct ReferencePixel {
    Vec2 pixel = Vec2::Zero();
    bool valid = false;
};

/// Ego-frame query points (already offset by the caller) projected into one
/// camera. Degenerate, behind-camera and out-of-image points are kept and
/// flagged invalid.
std::vector<ReferencePixel> project_reference_points(const std::vector<Vec3>& queries,
                                                     const MeiCamera& cam,
                                                     const Pose& cam_to_ego);

/// `count` z levels at the centres of equal sub-slabs of the grid's z slab.
std::vector<double> default_z_levels(const BevGrid& grid, int count = 4);

/// BEV query positions: one per bin centre and z level, bin-major.
std::vector<Vec3> lift_bev_queries(const BevGrid& grid, const std::vector<double>& z_levels);

enum class EncodingMode { cartesian, polar };

/// Position-encoding inputs for every (sampled pixel, depth) pair.
struct PositionEncodingInputs {
    int rows = 0;
    int cols = 0;
    std::size_t depths = 0;
    int width = 0;                    // 3 (cartesian) or 4 (polar)
    std::vector<double> values;       // rows * cols * depths * width, row-major
    std::vector<std::uint8_t> valid;  // per sampled pixel
    std::vector<Vec3> points;         // ego-frame R(u, v, d), same layout without width

    const double* at(std::size_t pixel, std::size_t depth) const {
        return values.data() + (pixel * depths + depth) * static_cast<std::size_t>(width);
    }
};

/// Cartesian mode: (x, y, z) normalized by the grid ranges to [0, 1] (polar
/// grids use [-rho_max, rho_max] for x and y). Polar mode: encode_polar.
/// Throws DomainError when polar mode is requested on a Cartesian grid.
PositionEncodingInputs petr_pe_inputs(const MeiCamera& cam, const Pose& cam_to_ego, int stride,
                                      const std::vector<double>& depths, const BevGrid& grid,
                                      EncodingMode mode, unsigned threads = 0);

/// The Cartesian normalization used by petr_pe_inputs.
Vec3 normalize_cartesian(const Vec3& p, const BevGrid& grid);

}  // namespace fbev
