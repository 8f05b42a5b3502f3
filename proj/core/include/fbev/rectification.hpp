#pragma once

// Virtual pinhole views synthesized from fisheye cameras.
//
// Each fisheye yields a forward view (yaw +30 deg) and a backward view
// (yaw -46 deg), both pitched -4 deg, with the focal length of the front
// pinhole cameras. Yaw is measured about the fisheye's up axis (-y) with
// positive values turning the view toward the vehicle front (+x ego), so the
// same settings work for the left and the right fisheye. Negative pitch tilts
// the optical axis downward (+y camera).

#include "fbev/calibration.hpp"
#include "fbev/camera.hpp"
#include "fbev/geometry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fbev {

struct VirtualViewSettings {
    int width = 704;
    int height = 376;
    double forward_yaw_deg = 30.0;
    double backward_yaw_deg = -46.0;
    double pitch_deg = -4.0;
};

struct VirtualPinhole {
    std::string name;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    double yaw_deg = 0.0;    // as configured, toward-front positive
    double pitch_deg = 0.0;
    Pose mount;              // virtual camera frame -> fisheye camera frame

    MeiCamera as_camera() const;
};

/// Mount rotation for a (yaw, pitch) pair; `yaw_sign` is +1 when a positive
/// rotation about the camera up axis already turns toward the vehicle front.
Quaternion mount_rotation(double yaw_rad, double pitch_rad, double yaw_sign);

/// +1 or -1 so that positive yaw turns this camera toward ego +x.
double forward_yaw_sign(const Pose& cam_to_ego);

/// Forward and backward virtual views for one fisheye. Principal point at the
/// image centre. Throws DomainError when front_focal <= 0.
std::array<VirtualPinhole, 2> make_virtual_cameras(const RigCamera& fisheye, double front_focal,
                                                   const VirtualViewSettings& settings = {});

/// Per target pixel source coordinates in the fisheye image.
struct RemapTable {
    int width = 0;   // target (virtual) size
    int height = 0;
    std::vector<Vec2> source;         // row-major, full double precision
    std::vector<std::uint8_t> valid;

    std::size_t index(int u, int v) const {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(u);
    }
    std::size_t valid_count() const;
};

/// Unproject each virtual pixel, rotate into the fisheye frame, project_mei.
RemapTable build_remap(const MeiCamera& fisheye, const VirtualPinhole& virt, unsigned threads = 0);

// Binary layout, little-endian:
//   bytes 0..7    magic "FBEVRMAP"
//   bytes 8..11   uint32 version (1)
//   bytes 12..15  uint32 width
//   bytes 16..19  uint32 height
//   bytes 20..23  uint32 dtype tag (1 = float32 pairs)
//   then width*height pairs (u_src, v_src) as float32, row-major;
//   invalid entries are (NaN, NaN).
inline constexpr char kRemapMagic[8] = {'F', 'B', 'E', 'V', 'R', 'M', 'A', 'P'};

std::string serialize_remap_binary(const RemapTable& table);
/// Throws ValidationError on a bad header or size.
RemapTable parse_remap_binary(const std::string& bytes);

// Text layout: first line "fbev-remap 1 <width> <height>", then one line per
// target pixel in row-major order: "<u> <v> <u_src> <v_src>" or
// "<u> <v> invalid". Values use shortest round-trip decimal form, so the
// text is lossless with respect to the in-memory table.
std::string serialize_remap_text(const RemapTable& table);
RemapTable parse_remap_text(const std::string& text);

/// Planar float image, row-major, interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    float at(int u, int v, int c) const {
        return data[(static_cast<std::size_t>(v) * width + u) * channels + c];
    }
};

/// Bilinear resampling through a remap table; invalid or out-of-image
/// samples become `fill`.
Image remap_bilinear(const Image& src, const RemapTable& table, float fill = 0.0f);

struct CoverageCamera {
    std::string name;
    MeiCamera camera;
    Pose cam_to_ego;
    /// When set, a direction counts only if this source camera also sees it
    /// (virtual views cannot see more than the fisheye they come from).
    std::optional<RigCamera> source;
};

struct CoverageReport {
    int bins = 0;
    std::vector<double> azimuth_rad;          // bin centres, ego frame, [0, 2*pi)
    std::vector<std::string> camera_names;
    std::vector<std::vector<std::uint8_t>> seen;  // [bin][camera]

    bool covered(int bin) const;
    int covered_bins() const;
};

/// Which cameras see the horizontal ego-frame direction at each azimuth bin
/// centre (j + 1/2) * 2*pi / bins. Throws DomainError when bins < 4.
CoverageReport fov_coverage(const std::vector<CoverageCamera>& cameras, int azimuth_bins);

/// CSV: "bin,azimuth_deg,<camera...>,covered" with 0/1 flags.
std::string format_coverage_csv(const CoverageReport& report);

struct RectifiedView {
    VirtualPinhole view;
    RemapTable remap;
};

/// Virtual views and remap tables for a rig, plus the resulting camera set:
/// the listed pinholes unchanged followed by the virtual views in fisheye
/// order (forward, backward).
struct RectifiedRig {
    std::vector<RectifiedView> views;
    CalibrationSet cameras;
};

RectifiedRig rectify_rig(const CalibrationSet& calibration, const std::vector<std::string>& fisheyes,
                         const std::vector<std::string>& pinholes, double front_focal,
                         const VirtualViewSettings& settings = {}, unsigned threads = 0);

/// Coverage cameras for the original rig (pinholes and fisheyes as is).
std::vector<CoverageCamera> rig_coverage_cameras(const CalibrationSet& calibration,
                                                 const std::vector<std::string>& names);
/// Coverage cameras for the rectified set; virtual views keep their fisheye
/// as source.
std::vector<CoverageCamera> rectified_coverage_cameras(const CalibrationSet& calibration,
                                                       const std::vector<std::string>& fisheyes,
                                                       const std::vector<std::string>& pinholes,
                                                       double front_focal,
                                                       const VirtualViewSettings& settings = {});

}  // namespace fbev
