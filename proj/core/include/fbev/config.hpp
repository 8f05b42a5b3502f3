#pragma once

// Toolkit configuration: one JSON file, SI units, angles in degrees where
// the key ends in _deg. Unknown keys are errors.
//
//   {
//     "calibration": "rig.calib",             // relative to the config file
//     "bev_grid": {"mode": "polar", "rho_max": 51.2, "n_theta": 128,
//                  "n_rho": 64, "z": [-5, 3]},
//              // or {"mode": "cartesian", "x": [-51.2, 51.2], "nx": 128,
//              //     "y": [-51.2, 51.2], "ny": 128, "z": [-5, 3]}
//     "depths": {"near": 1, "far": 61, "count": 64},   // or an explicit list
//     "converter": {"window_m": 200, "d_max": 80, "min_pts": 1,
//                   "sync_tol_s": 0.01, "cameras": [...], "lidar": [...]},
//     "rectify": {"front_focal": 552.5, "width": 704, "height": 376,
//                 "forward_yaw_deg": 30, "backward_yaw_deg": -46,
//                 "pitch_deg": -4, "fisheyes": [...], "pinholes": [...]},
//     "view": {"stride": 8, "z_levels": [-3, -1, 1, 3]},
//     "evaluation": {"classes": [...], "thresholds": [0.5, 1, 2, 4],
//                    "tp_threshold": 2,
//                    "distance_bins": [[0, 10], [10, 20], ...],
//                    "angular_sectors": [{"name": "front",
//                                         "intervals": [[-60, 60]]}, ...]}
//   }
//
// Every section is optional; commands that need a missing section fail.

#include "fbev/calibration.hpp"
#include "fbev/converter.hpp"
#include "fbev/detection_eval.hpp"
#include "fbev/polar_bev.hpp"
#include "fbev/rectification.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fbev {

struct RectifyConfig {
    std::optional<double> front_focal;  // defaults to the first pinhole's fx
    VirtualViewSettings view;
    std::vector<std::string> fisheyes;
    std::vector<std::string> pinholes;
};

struct ViewConfig {
    int stride = 8;
    std::vector<double> z_levels;  // empty: default_z_levels(grid)
};

struct ToolkitConfig {
    std::filesystem::path source;  // config file, empty for in-memory text
    std::optional<std::filesystem::path> calibration_path;
    CalibrationSet calibration;
    std::optional<BevGrid> bev_grid;
    std::vector<double> depths;
    ConverterConfig converter;
    std::vector<std::string> converter_cameras;
    std::vector<std::string> converter_lidar;
    RectifyConfig rectify;
    ViewConfig view;
    EvalConfig evaluation;
    StrataSpec distance_strata;
    StrataSpec angular_strata;

    /// Throws ValidationError naming the missing section.
    const BevGrid& grid() const;
    double front_focal() const;
};

ToolkitConfig default_config();

/// `base_dir` resolves the calibration path. Errors carry `source_name`.
ToolkitConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& source_name = "<config>");
ToolkitConfig load_config(const std::filesystem::path& path);

}  // namespace fbev
