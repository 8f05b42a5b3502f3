#include "fbev/view_transform.hpp"

#include "fbev/errors.hpp"
#include "fbev/exact_sum.hpp"
#include "fbev/parallel.hpp"

#include <cmath>
#include <string>

namespace fbev {

FeatureCloud::FeatureCloud(int channels) : channels_(channels) {
    if (channels < 0) throw DomainError("FeatureCloud: negative channel count");
}

void FeatureCloud::add(const Vec3& point, const double* feature, std::size_t length,
                       std::int32_t camera_id) {
    if (length != static_cast<std::size_t>(channels_))
        throw DomainError("FeatureCloud: feature length " + std::to_string(length) +
                          " != channels " + std::to_string(channels_));
    points_.push_back(point);
    features_.insert(features_.end(), feature, feature + length);
    camera_ids_.push_back(camera_id);
}

void FeatureCloud::append(const FeatureCloud& other) {
    if (other.channels_ != channels_) throw DomainError("FeatureCloud: channel count mismatch");
    points_.insert(points_.end(), other.points_.begin(), other.points_.end());
    features_.insert(features_.end(), other.features_.begin(), other.features_.end());
    camera_ids_.insert(camera_ids_.end(), other.camera_ids_.begin(), other.camera_ids_.end());
}

std::vector<double> uniform_depths(double near, double far, int count) {
    if (count < 1 || !(near > 0.0) || (count > 1 && !(far > near)))
        throw DomainError("uniform_depths: need count >= 1 and 0 < near < far");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        out.push_back(near);
        return out;
    }
    const double step = (far - near) / (count - 1);
    for (int i = 0; i < count; ++i) out.push_back(near + step * i);
    out.back() = far;
    return out;
}

FeatureCloud lift_frustum(const MeiCamera& cam, const Pose& cam_to_ego, int stride,
                          const std::vector<double>& depths, const FeatureImage& features,
                          std::int32_t camera_id, unsigned threads) {
    const RayGrid rays = generate_ray_grid(cam, stride, depths, threads);
    if (features.rows != rays.rows || features.cols != rays.cols)
        throw DomainError("lift_frustum: feature grid " + std::to_string(features.rows) + "x" +
                          std::to_string(features.cols) + " does not match pixel grid " +
                          std::to_string(rays.rows) + "x" + std::to_string(rays.cols));
    if (features.data.size() !=
        static_cast<std::size_t>(features.rows) * features.cols * features.channels)
        throw DomainError("lift_frustum: feature buffer size mismatch");

    FeatureCloud cloud(features.channels);
    for (int row = 0; row < rays.rows; ++row) {
        for (int col = 0; col < rays.cols; ++col) {
            const std::size_t idx = rays.pixel_index(row, col);
            if (!rays.valid[idx]) continue;
            const double* f = features.at(row, col);
            for (std::size_t d = 0; d < depths.size(); ++d)
                cloud.add(cam_to_ego.apply(rays.point(idx, d)), f,
                          static_cast<std::size_t>(features.channels), camera_id);
        }
    }
    return cloud;
}

BevFeatureMap splat(const FeatureCloud& cloud, const BevGrid& grid, unsigned threads) {
    grid.validate();
    BevFeatureMap map;
    map.grid = grid;
    map.channels = cloud.channels();
    const std::size_t n_bins = grid.bin_count();
    const std::size_t channels = static_cast<std::size_t>(cloud.channels());
    map.data.assign(channels * n_bins, 0.0);

    constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
    std::vector<std::size_t> bin_of(cloud.size(), kDropped);
    parallel_for_chunks(cloud.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto bin = flat_bin(cloud.point(i), grid);
            if (bin) bin_of[i] = *bin;
        }
    });

    // Counting sort of point indices by bin.
    std::vector<std::size_t> offsets(n_bins + 1, 0);
    for (std::size_t bin : bin_of)
        if (bin != kDropped) ++offsets[bin + 1];
    for (std::size_t b = 0; b < n_bins; ++b) offsets[b + 1] += offsets[b];
    map.points_in_range = offsets[n_bins];
    std::vector<std::size_t> order(map.points_in_range);
    {
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t i = 0; i < bin_of.size(); ++i)
            if (bin_of[i] != kDropped) order[cursor[bin_of[i]]++] = i;
    }

    parallel_for_chunks(n_bins, threads, [&](std::size_t b_begin, std::size_t b_end) {
        std::vector<ExactAccumulator> acc(channels);
        for (std::size_t bin = b_begin; bin < b_end; ++bin) {
            if (offsets[bin] == offsets[bin + 1]) continue;
            for (auto& a : acc) a.reset();
            for (std::size_t k = offsets[bin]; k < offsets[bin + 1]; ++k) {
                const double* f = cloud.feature(order[k]);
                for (std::size_t c = 0; c < channels; ++c) acc[c].add(f[c]);
            }
            for (std::size_t c = 0; c < channels; ++c) map.data[c * n_bins + bin] = acc[c].value();
        }
    });
    return map;
}

std::vector<ReferencePixel> project_reference_points(const std::vector<Vec3>& queries,
                                                     const MeiCamera& cam,
                                                     const Pose& cam_to_ego) {
    const Pose ego_to_cam = cam_to_ego.inverse();
    std::vector<ReferencePixel> out(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const Vec3 p = ego_to_cam.apply(queries[i]);
        if (p.norm() == 0.0) continue;
        const ProjectionResult pr = project_mei(cam, p);
        out[i].pixel = pr.pixel;
        out[i].valid = pr.valid;
    }
    return out;
}

std::vector<double> default_z_levels(const BevGrid& grid, int count) {
    if (count < 1) throw DomainError("default_z_levels: count must be >= 1");
    std::vector<double> out;
    const double h = (grid.z_max - grid.z_min) / count;
    for (int k = 0; k < count; ++k) out.push_back(grid.z_min + (k + 0.5) * h);
    return out;
}

std::vector<Vec3> lift_bev_queries(const BevGrid& grid, const std::vector<double>& z_levels) {
    grid.validate();
    std::vector<Vec3> out;
    out.reserve(grid.bin_count() * z_levels.size());
    if (grid.is_polar()) {
        for (int t = 0; t < grid.n_theta; ++t)
            for (int r = 0; r < grid.n_rho; ++r) {
                CylindricalPoint c = bin_center({t, r}, grid);
                for (double z : z_levels) {
                    c.z = z;
                    out.push_back(cyl_to_cart(c));
                }
            }
    } else {
        const double dx = (grid.x_max - grid.x_min) / grid.nx;
        const double dy = (grid.y_max - grid.y_min) / grid.ny;
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix)
                for (double z : z_levels)
                    out.emplace_back(grid.x_min + (ix + 0.5) * dx, grid.y_min + (iy + 0.5) * dy, z);
    }
    return out;
}

Vec3 normalize_cartesian(const Vec3& p, const BevGrid& grid) {
    double x0 = grid.x_min, x1 = grid.x_max, y0 = grid.y_min, y1 = grid.y_max;
    if (grid.is_polar()) {
        x0 = y0 = -grid.rho_max;
        x1 = y1 = grid.rho_max;
    }
    const double zh = grid.z_max - grid.z_min;
    if (!(zh > 0.0)) throw DomainError("normalize_cartesian: zero-height z slab");
    return {(p.x() - x0) / (x1 - x0), (p.y() - y0) / (y1 - y0), (p.z() - grid.z_min) / zh};
}

PositionEncodingInputs petr_pe_inputs(const MeiCamera& cam, const Pose& cam_to_ego, int stride,
                                      const std::vector<double>& depths, const BevGrid& grid,
                                      EncodingMode mode, unsigned threads) {
    if (mode == EncodingMode::polar && !grid.is_polar())
        throw DomainError("petr_pe_inputs: polar mode needs a polar grid");
    const RayGrid rays = generate_ray_grid(cam, stride, depths, threads);

    PositionEncodingInputs out;
    out.rows = rays.rows;
    out.cols = rays.cols;
    out.depths = depths.size();
    out.width = mode == EncodingMode::polar ? 4 : 3;
    out.valid = rays.valid;
    const std::size_t n_pix = rays.pixels.size();
    out.points.assign(n_pix * out.depths, Vec3::Zero());
    out.values.assign(n_pix * out.depths * static_cast<std::size_t>(out.width), 0.0);

    parallel_for_chunks(n_pix, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t px = b; px < e; ++px) {
            if (!rays.valid[px]) continue;
            for (std::size_t d = 0; d < out.depths; ++d) {
                const Vec3 p = cam_to_ego.apply(rays.point(px, d));
                out.points[px * out.depths + d] = p;
                double* dst = out.values.data() + (px * out.depths + d) * out.width;
                if (mode == EncodingMode::polar) {
                    const PolarEncoding enc = encode_polar(p, grid);
                    for (int k = 0; k < 4; ++k) dst[k] = enc.v[static_cast<std::size_t>(k)];
                } else {
                    const Vec3 n = normalize_cartesian(p, grid);
                    dst[0] = n.x();
                    dst[1] = n.y();
                    dst[2] = n.z();
                }
            }
        }
    });
    return out;
}

}  // namespace fbev
