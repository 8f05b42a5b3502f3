#include "fbev/rectification.hpp"

#include "fbev/errors.hpp"
#include "fbev/format.hpp"
#include "fbev/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace fbev {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(const std::string& in, std::size_t offset) {
    return std::bit_cast<float>(get_u32(in, offset));
}

}  // namespace

MeiCamera VirtualPinhole::as_camera() const {
    MeiCamera cam = MeiCamera::pinhole(fx, fy, cx, cy, width, height);
    cam.name = name;
    return cam;
}

Quaternion mount_rotation(double yaw_rad, double pitch_rad, double yaw_sign) {
    const Quaternion yaw = Quaternion::from_axis_angle(Vec3(0.0, -1.0, 0.0), yaw_sign * yaw_rad);
    const Quaternion pitch = Quaternion::from_axis_angle(Vec3::UnitX(), pitch_rad);
    return yaw * pitch;
}

double forward_yaw_sign(const Pose& cam_to_ego) {
    // A positive rotation about camera-up swings the optical axis toward -x_cam.
    const Vec3 left_in_ego = cam_to_ego.rotation().rotate(Vec3(-1.0, 0.0, 0.0));
    return left_in_ego.x() < 0.0 ? -1.0 : 1.0;
}

std::array<VirtualPinhole, 2> make_virtual_cameras(const RigCamera& fisheye, double front_focal,
                                                   const VirtualViewSettings& settings) {
    if (!(front_focal > 0.0)) throw DomainError("make_virtual_cameras: front_focal must be > 0");
    if (settings.width <= 0 || settings.height <= 0)
        throw DomainError("make_virtual_cameras: virtual image size must be positive");

    const double sign = forward_yaw_sign(fisheye.cam_to_ego);
    auto make = [&](const char* suffix, double yaw_deg) {
        VirtualPinhole v;
        v.name = fisheye.camera.name + suffix;
        v.fx = front_focal;
        v.fy = front_focal;
        v.width = settings.width;
        v.height = settings.height;
        v.cx = 0.5 * settings.width;
        v.cy = 0.5 * settings.height;
        v.yaw_deg = yaw_deg;
        v.pitch_deg = settings.pitch_deg;
        v.mount = Pose(mount_rotation(deg_to_rad(yaw_deg), deg_to_rad(settings.pitch_deg), sign),
                       Vec3::Zero());
        return v;
    };
    return {make("_forward", settings.forward_yaw_deg), make("_backward", settings.backward_yaw_deg)};
}

std::size_t RemapTable::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v;
    return n;
}

RemapTable build_remap(const MeiCamera& fisheye, const VirtualPinhole& virt, unsigned threads) {
    fisheye.validate();
    RemapTable table;
    table.width = virt.width;
    table.height = virt.height;
    const std::size_t n = static_cast<std::size_t>(virt.width) * virt.height;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.source.assign(n, Vec2(nan, nan));
    table.valid.assign(n, 0);

    parallel_for_chunks(static_cast<std::size_t>(virt.height), threads,
                        [&](std::size_t v_begin, std::size_t v_end) {
        for (std::size_t v = v_begin; v < v_end; ++v) {
            for (int u = 0; u < virt.width; ++u) {
                const Vec3 ray_virtual((u - virt.cx) / virt.fx,
                                       (static_cast<double>(v) - virt.cy) / virt.fy, 1.0);
                const Vec3 ray_fisheye = virt.mount.rotation().rotate(ray_virtual);
                const ProjectionResult pr = project_mei(fisheye, ray_fisheye);
                if (!pr.valid) continue;
                const std::size_t idx = table.index(u, static_cast<int>(v));
                table.source[idx] = pr.pixel;
                table.valid[idx] = 1;
            }
        }
    });
    return table;
}

std::string serialize_remap_binary(const RemapTable& table) {
    std::string out;
    out.reserve(24 + table.source.size() * 8);
    out.append(kRemapMagic, sizeof(kRemapMagic));
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(table.width));
    put_u32(out, static_cast<std::uint32_t>(table.height));
    put_u32(out, 1);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::size_t i = 0; i < table.source.size(); ++i) {
        if (table.valid[i]) {
            put_f32(out, static_cast<float>(table.source[i].x()));
            put_f32(out, static_cast<float>(table.source[i].y()));
        } else {
            put_f32(out, nan);
            put_f32(out, nan);
        }
    }
    return out;
}

RemapTable parse_remap_binary(const std::string& bytes) {
    if (bytes.size() < 24 || std::memcmp(bytes.data(), kRemapMagic, sizeof(kRemapMagic)) != 0)
        throw ValidationError("remap table: bad magic");
    if (get_u32(bytes, 8) != 1) throw ValidationError("remap table: unsupported version");
    if (get_u32(bytes, 20) != 1) throw ValidationError("remap table: unsupported dtype");
    RemapTable t;
    t.width = static_cast<int>(get_u32(bytes, 12));
    t.height = static_cast<int>(get_u32(bytes, 16));
    const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
    if (bytes.size() != 24 + n * 8) throw ValidationError("remap table: size mismatch");
    t.source.resize(n);
    t.valid.assign(n, 0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < n; ++i) {
        const float u = get_f32(bytes, 24 + 8 * i);
        const float v = get_f32(bytes, 28 + 8 * i);
        if (std::isnan(u) || std::isnan(v)) {
            t.source[i] = Vec2(nan, nan);
        } else {
            t.source[i] = Vec2(u, v);
            t.valid[i] = 1;
        }
    }
    return t;
}

std::string serialize_remap_text(const RemapTable& table) {
    std::string out = "fbev-remap 1 " + std::to_string(table.width) + " " +
                      std::to_string(table.height) + "\n";
    for (int v = 0; v < table.height; ++v) {
        for (int u = 0; u < table.width; ++u) {
            const std::size_t i = table.index(u, v);
            out += std::to_string(u);
            out += ' ';
            out += std::to_string(v);
            if (table.valid[i]) {
                out += ' ';
                out += format_double(table.source[i].x());
                out += ' ';
                out += format_double(table.source[i].y());
            } else {
                out += " invalid";
            }
            out += '\n';
        }
    }
    return out;
}

RemapTable parse_remap_text(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int version = 0;
    RemapTable t;
    if (!(is >> tag >> version >> t.width >> t.height) || tag != "fbev-remap" || version != 1 ||
        t.width < 0 || t.height < 0)
        throw ValidationError("remap text: bad header");
    const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.source.assign(n, Vec2(nan, nan));
    t.valid.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int u = 0, v = 0;
        std::string a;
        if (!(is >> u >> v >> a)) throw ValidationError("remap text: truncated");
        if (u < 0 || v < 0 || u >= t.width || v >= t.height || t.index(u, v) != i)
            throw ValidationError("remap text: out-of-order entry");
        if (a == "invalid") continue;
        std::string b;
        double su = 0.0, sv = 0.0;
        if (!(is >> b) || !parse_double(a, su) || !parse_double(b, sv))
            throw ValidationError("remap text: bad coordinates");
        t.source[i] = Vec2(su, sv);
        t.valid[i] = 1;
    }
    return t;
}

Image remap_bilinear(const Image& src, const RemapTable& table, float fill) {
    Image out;
    out.width = table.width;
    out.height = table.height;
    out.channels = src.channels;
    out.data.assign(static_cast<std::size_t>(out.width) * out.height * out.channels, fill);
    for (int v = 0; v < table.height; ++v) {
        for (int u = 0; u < table.width; ++u) {
            const std::size_t i = table.index(u, v);
            if (!table.valid[i]) continue;
            const double x = table.source[i].x();
            const double y = table.source[i].y();
            const int x0 = static_cast<int>(std::floor(x));
            const int y0 = static_cast<int>(std::floor(y));
            if (x0 < 0 || y0 < 0 || x0 >= src.width || y0 >= src.height) continue;
            const int x1 = std::min(x0 + 1, src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const double ax = x - x0;
            const double ay = y - y0;
            for (int c = 0; c < src.channels; ++c) {
                const double top = (1.0 - ax) * src.at(x0, y0, c) + ax * src.at(x1, y0, c);
                const double bot = (1.0 - ax) * src.at(x0, y1, c) + ax * src.at(x1, y1, c);
                out.data[i * out.channels + c] = static_cast<float>((1.0 - ay) * top + ay * bot);
            }
        }
    }
    return out;
}

bool CoverageReport::covered(int bin) const {
    for (auto s : seen[static_cast<std::size_t>(bin)])
        if (s) return true;
    return false;
}

int CoverageReport::covered_bins() const {
    int n = 0;
    for (int b = 0; b < bins; ++b) n += covered(b) ? 1 : 0;
    return n;
}

CoverageReport fov_coverage(const std::vector<CoverageCamera>& cameras, int azimuth_bins) {
    if (azimuth_bins < 4) throw DomainError("fov_coverage: azimuth_bins must be >= 4");
    CoverageReport report;
    report.bins = azimuth_bins;
    for (const auto& c : cameras) report.camera_names.push_back(c.name);
    report.seen.assign(static_cast<std::size_t>(azimuth_bins),
                       std::vector<std::uint8_t>(cameras.size(), 0));
    auto sees = [](const MeiCamera& cam, const Pose& cam_to_ego, const Vec3& dir_ego) {
        const Vec3 dir_cam = cam_to_ego.rotation().conjugate().rotate(dir_ego);
        return project_mei(cam, dir_cam).valid;
    };
    for (int b = 0; b < azimuth_bins; ++b) {
        const double az = (b + 0.5) * kTwoPi / azimuth_bins;
        report.azimuth_rad.push_back(az);
        const Vec3 dir(std::cos(az), std::sin(az), 0.0);
        for (std::size_t c = 0; c < cameras.size(); ++c) {
            const auto& cc = cameras[c];
            bool ok = sees(cc.camera, cc.cam_to_ego, dir);
            if (ok && cc.source) ok = sees(cc.source->camera, cc.source->cam_to_ego, dir);
            report.seen[static_cast<std::size_t>(b)][c] = ok ? 1 : 0;
        }
    }
    return report;
}

std::string format_coverage_csv(const CoverageReport& report) {
    std::ostringstream os;
    os << "bin,azimuth_deg";
    for (const auto& n : report.camera_names) os << ',' << n;
    os << ",covered\n";
    for (int b = 0; b < report.bins; ++b) {
        os << b << ',' << format_double(rad_to_deg(report.azimuth_rad[static_cast<std::size_t>(b)]));
        for (auto s : report.seen[static_cast<std::size_t>(b)]) os << ',' << int(s);
        os << ',' << (report.covered(b) ? 1 : 0) << '\n';
    }
    return os.str();
}

RectifiedRig rectify_rig(const CalibrationSet& calibration, const std::vector<std::string>& fisheyes,
                         const std::vector<std::string>& pinholes, double front_focal,
                         const VirtualViewSettings& settings, unsigned threads) {
    RectifiedRig out;
    std::vector<RigCamera> cams;
    for (const auto& name : pinholes) cams.push_back(calibration.at(name));
    for (const auto& name : fisheyes) {
        const RigCamera& fe = calibration.at(name);
        for (const auto& v : make_virtual_cameras(fe, front_focal, settings)) {
            cams.push_back({v.as_camera(), fe.cam_to_ego * v.mount});
            out.views.push_back({v, build_remap(fe.camera, v, threads)});
        }
    }
    out.cameras = CalibrationSet(std::move(cams));
    return out;
}

std::vector<CoverageCamera> rig_coverage_cameras(const CalibrationSet& calibration,
                                                 const std::vector<std::string>& names) {
    std::vector<CoverageCamera> out;
    for (const auto& name : names) {
        const RigCamera& r = calibration.at(name);
        out.push_back({name, r.camera, r.cam_to_ego, std::nullopt});
    }
    return out;
}

std::vector<CoverageCamera> rectified_coverage_cameras(const CalibrationSet& calibration,
                                                       const std::vector<std::string>& fisheyes,
                                                       const std::vector<std::string>& pinholes,
                                                       double front_focal,
                                                       const VirtualViewSettings& settings) {
    std::vector<CoverageCamera> out = rig_coverage_cameras(calibration, pinholes);
    for (const auto& name : fisheyes) {
        const RigCamera& fe = calibration.at(name);
        for (const auto& v : make_virtual_cameras(fe, front_focal, settings))
            out.push_back({v.name, v.as_camera(), fe.cam_to_ego * v.mount, fe});
    }
    return out;
}

}  // namespace fbev
