#include "fbev/config.hpp"

#include "fbev/class_map.hpp"
#include "fbev/errors.hpp"
#include "fbev/format.hpp"
#include "fbev/view_transform.hpp"

#include "json.hpp"

#include <algorithm>
#include <set>

namespace fbev {

namespace {

using nlohmann::json;

class Section {
public:
    Section(const json& j, std::string path, std::string source) : j_(j), path_(std::move(path)), source_(std::move(source)) {
        if (!j_.is_object()) fail("expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!known.count(k)) fail("unknown key '" + k + "'");
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }
    Section sub(const char* key) const { return Section(j_.at(key), path_ + "." + key, source_); }

    double number(const char* key) const {
        const json& v = j_.at(key);
        if (!v.is_number()) fail(std::string(key) + " must be a number");
        return v.get<double>();
    }
    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    int integer(const char* key) const {
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(std::string(key) + " must be an integer");
        return v.get<int>();
    }
    int integer_or(const char* key, int fallback) const { return has(key) ? integer(key) : fallback; }

    std::string string(const char* key) const {
        const json& v = j_.at(key);
        if (!v.is_string()) fail(std::string(key) + " must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key) const { return number_list(j_.at(key), key); }

    std::vector<std::string> strings(const char* key) const {
        const json& v = j_.at(key);
        if (!v.is_array()) fail(std::string(key) + " must be a list of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail(std::string(key) + " must be a list of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::array<double, 2> range(const char* key) const { return pair(j_.at(key), key); }

    std::vector<double> number_list(const json& v, const std::string& what) const {
        if (!v.is_array()) fail(what + " must be a list of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(what + " must be a list of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::array<double, 2> pair(const json& v, const std::string& what) const {
        const auto xs = number_list(v, what);
        if (xs.size() != 2) fail(what + " must have two entries");
        return {xs[0], xs[1]};
    }

    const std::string& source() const { return source_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ValidationError(source_ + ": " + path_ + ": " + msg); }

private:
    const json& j_;
    std::string path_;
    std::string source_;
};

BevGrid parse_grid(const Section& s) {
    const std::string mode = s.string("mode");
    BevGrid g;
    if (mode == "polar") {
        s.allow({"mode", "rho_max", "n_theta", "n_rho", "z"});
        const auto z = s.range("z");
        g = BevGrid::polar(s.number("rho_max"), s.integer("n_theta"), s.integer("n_rho"), z[0], z[1]);
    } else if (mode == "cartesian") {
        s.allow({"mode", "x", "nx", "y", "ny", "z"});
        const auto x = s.range("x");
        const auto y = s.range("y");
        const auto z = s.range("z");
        g = BevGrid::cartesian(x[0], x[1], s.integer("nx"), y[0], y[1], s.integer("ny"), z[0], z[1]);
    } else {
        s.fail("mode must be \"polar\" or \"cartesian\"");
    }
    try {
        g.validate();
    } catch (const ValidationError& e) {
        s.fail(e.what());
    }
    return g;
}

std::vector<double> parse_depths(const json& v, const Section& parent) {
    std::vector<double> d;
    if (v.is_array()) {
        d = parent.number_list(v, "depths");
    } else {
        const Section s(v, "depths", parent.source());
        s.allow({"near", "far", "count"});
        const int count = s.integer("count");
        if (count < 1) parent.fail("depths.count must be >= 1");
        d = uniform_depths(s.number("near"), s.number("far"), count);
    }
    if (d.empty() || d.front() <= 0.0) parent.fail("depths must be non-empty and positive");
    for (std::size_t i = 1; i < d.size(); ++i)
        if (!(d[i] > d[i - 1])) parent.fail("depths must be strictly increasing");
    return d;
}

StrataSpec parse_distance_bins(const Section& eval) {
    StrataSpec s;
    s.kind = StratumKind::distance;
    const json& v = eval.raw("distance_bins");
    if (!v.is_array()) eval.fail("distance_bins must be a list of [lo, hi] pairs");
    for (const auto& e : v) {
        const auto iv = eval.pair(e, "distance_bins entry");
        s.strata.push_back({format_double(iv[0]) + "-" + format_double(iv[1]), {iv}});
    }
    return s;
}

StrataSpec parse_sectors(const Section& eval) {
    StrataSpec s;
    s.kind = StratumKind::angular;
    const json& v = eval.raw("angular_sectors");
    if (!v.is_array()) eval.fail("angular_sectors must be a list");
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Section sec(v[i], "evaluation.angular_sectors[" + std::to_string(i) + "]", eval.source());
        sec.allow({"name", "intervals"});
        Stratum st;
        st.name = sec.string("name");
        const json& ivs = sec.raw("intervals");
        if (!ivs.is_array()) eval.fail("intervals must be a list of [lo, hi] pairs");
        for (const auto& e : ivs) st.intervals.push_back(eval.pair(e, "interval"));
        s.strata.push_back(std::move(st));
    }
    return s;
}

void require_cameras(const ToolkitConfig& c, const std::vector<std::string>& names, const char* where,
                     const std::string& source) {
    for (const auto& n : names)
        if (!c.calibration.contains(n))
            throw ValidationError(source + ": " + where + " names camera '" + n + "' missing from the calibration set");
}

}  // namespace

const BevGrid& ToolkitConfig::grid() const {
    if (!bev_grid) throw ValidationError("config: bev_grid section is required for this command");
    return *bev_grid;
}

double ToolkitConfig::front_focal() const {
    if (rectify.front_focal) return *rectify.front_focal;
    if (rectify.pinholes.empty())
        throw ValidationError("config: rectify.front_focal or rectify.pinholes is required");
    return calibration.at(rectify.pinholes.front()).camera.fx;
}

ToolkitConfig default_config() {
    ToolkitConfig c;
    c.depths = uniform_depths();
    c.evaluation = EvalConfig::defaults();
    c.distance_strata = StrataSpec::distance_bins();
    c.angular_strata = StrataSpec::angular_sectors();
    return c;
}

ToolkitConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& source_name) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(source_name + ": " + e.what());
    }
    ToolkitConfig c = default_config();
    try {
        const Section root(j, "config", source_name);
        root.allow({"calibration", "bev_grid", "depths", "converter", "rectify", "view", "evaluation"});

        if (root.has("calibration")) {
            std::filesystem::path p = root.string("calibration");
            if (p.is_relative()) p = base_dir / p;
            c.calibration_path = p;
            c.calibration = load_calibration(p);
        }
        if (root.has("bev_grid")) c.bev_grid = parse_grid(root.sub("bev_grid"));
        if (root.has("depths")) c.depths = parse_depths(root.raw("depths"), root);

        if (root.has("converter")) {
            const Section s = root.sub("converter");
            s.allow({"window_m", "d_max", "min_pts", "sync_tol_s", "cameras", "lidar"});
            c.converter.window_m = s.number_or("window_m", c.converter.window_m);
            c.converter.d_max = s.number_or("d_max", c.converter.d_max);
            c.converter.min_pts = s.integer_or("min_pts", c.converter.min_pts);
            c.converter.sync_tol = s.number_or("sync_tol_s", c.converter.sync_tol);
            if (s.has("cameras")) c.converter_cameras = s.strings("cameras");
            if (s.has("lidar")) c.converter_lidar = s.strings("lidar");
            if (!(c.converter.window_m > 0.0)) s.fail("window_m must be > 0");
            if (!(c.converter.d_max > 0.0)) s.fail("d_max must be > 0");
            if (c.converter.min_pts < 0) s.fail("min_pts must be >= 0");
            if (!(c.converter.sync_tol >= 0.0)) s.fail("sync_tol_s must be >= 0");
        }
        c.converter.sensors = c.converter_cameras;
        c.converter.sensors.insert(c.converter.sensors.end(), c.converter_lidar.begin(), c.converter_lidar.end());

        if (root.has("rectify")) {
            const Section s = root.sub("rectify");
            s.allow({"front_focal", "width", "height", "forward_yaw_deg", "backward_yaw_deg", "pitch_deg", "fisheyes",
                     "pinholes"});
            if (s.has("front_focal")) {
                c.rectify.front_focal = s.number("front_focal");
                if (!(*c.rectify.front_focal > 0.0)) s.fail("front_focal must be > 0");
            }
            VirtualViewSettings& v = c.rectify.view;
            v.width = s.integer_or("width", v.width);
            v.height = s.integer_or("height", v.height);
            v.forward_yaw_deg = s.number_or("forward_yaw_deg", v.forward_yaw_deg);
            v.backward_yaw_deg = s.number_or("backward_yaw_deg", v.backward_yaw_deg);
            v.pitch_deg = s.number_or("pitch_deg", v.pitch_deg);
            if (v.width < 1 || v.height < 1) s.fail("width and height must be >= 1");
            if (s.has("fisheyes")) c.rectify.fisheyes = s.strings("fisheyes");
            if (s.has("pinholes")) c.rectify.pinholes = s.strings("pinholes");
        }

        if (root.has("view")) {
            const Section s = root.sub("view");
            s.allow({"stride", "z_levels"});
            c.view.stride = s.integer_or("stride", c.view.stride);
            if (c.view.stride < 1) s.fail("stride must be >= 1");
            if (s.has("z_levels")) c.view.z_levels = s.numbers("z_levels");
        }

        if (root.has("evaluation")) {
            const Section s = root.sub("evaluation");
            s.allow({"classes", "thresholds", "tp_threshold", "distance_bins", "angular_sectors"});
            if (s.has("classes")) {
                c.evaluation.classes = s.strings("classes");
                if (c.evaluation.classes.empty()) s.fail("classes must not be empty");
            }
            if (s.has("thresholds")) {
                c.evaluation.thresholds = s.numbers("thresholds");
                if (c.evaluation.thresholds.empty()) s.fail("thresholds must not be empty");
                for (double t : c.evaluation.thresholds)
                    if (!(t > 0.0)) s.fail("thresholds must be > 0");
            }
            c.evaluation.tp_threshold = s.number_or("tp_threshold", c.evaluation.tp_threshold);
            if (!(c.evaluation.tp_threshold > 0.0)) s.fail("tp_threshold must be > 0");
            if (s.has("distance_bins")) c.distance_strata = parse_distance_bins(s);
            if (s.has("angular_sectors")) c.angular_strata = parse_sectors(s);
            try {
                c.distance_strata.validate();
                c.angular_strata.validate();
            } catch (const ValidationError& e) {
                s.fail(e.what());
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(source_name + ": " + e.what());
    }

    require_cameras(c, c.converter_cameras, "converter.cameras", source_name);
    require_cameras(c, c.rectify.fisheyes, "rectify.fisheyes", source_name);
    require_cameras(c, c.rectify.pinholes, "rectify.pinholes", source_name);
    for (const auto& n : c.converter_lidar)
        if (c.calibration.contains(n))
            throw ValidationError(source_name + ": converter.lidar names camera '" + n + "'");
    return c;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
    ToolkitConfig c = parse_config(read_text_file(path), path.parent_path(), path.string());
    c.source = path;
    return c;
}

}  // namespace fbev
