#pragma once

// Flat binary tensor files used for CLI piping and golden tests.
//
// Layout, little-endian:
//   bytes 0..7   magic "FBEVTNSR"
//   uint32       version (1)
//   uint32       dtype tag (2 = float64)
//   uint32       kind length K, then K bytes of ASCII kind
//   uint32       ndim, then ndim x uint64 dims
//   body         prod(dims) float64 values, row-major
//
// Kinds written by the toolkit:
//   feature_cloud   [N, 4 + C]       x, y, z (ego, m), camera id, C features
//   bev_polar       [C, N_theta, N_rho]
//   bev_cartesian   [C, ny, nx]
//   pe_cartesian    [rows, cols, depths, 3]   NaN for invalid pixels
//   pe_polar        [rows, cols, depths, 4]   NaN for invalid pixels

#include "fbev/view_transform.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fbev {

struct Tensor {
    std::string kind;
    std::vector<std::uint64_t> shape;
    std::vector<double> values;

    std::uint64_t element_count() const;
};

inline constexpr char kTensorMagic[8] = {'F', 'B', 'E', 'V', 'T', 'N', 'S', 'R'};

std::string serialize_tensor(const Tensor& t);
/// Throws ValidationError on malformed input.
Tensor parse_tensor(const std::string& bytes);

Tensor to_tensor(const FeatureCloud& cloud);
/// Throws ValidationError unless kind is feature_cloud with shape [N, >=4].
FeatureCloud cloud_from_tensor(const Tensor& t);

Tensor to_tensor(const BevFeatureMap& map);
Tensor to_tensor(const PositionEncodingInputs& pe, EncodingMode mode);

}  // namespace fbev
