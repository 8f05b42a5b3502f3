// fbev: command-line front end for the fisheye BEV toolkit.
//
// Exit codes: 0 success, 1 validation (bad config, input or usage),
// 2 I/O, 3 integrity. Failures print one line "error[<kind>]: <message>".

#include "fbev/calibration.hpp"
#include "fbev/config.hpp"
#include "fbev/converter.hpp"
#include "fbev/detection_eval.hpp"
#include "fbev/errors.hpp"
#include "fbev/format.hpp"
#include "fbev/recordset.hpp"
#include "fbev/rectification.hpp"
#include "fbev/tensor_io.hpp"
#include "fbev/view_transform.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitIntegrity = 3;

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

int report(const char* kind, const std::string& msg, int code) {
    std::cerr << "error[" << kind << "]: " << one_line(msg) << "\n";
    return code;
}

struct Common {
    std::string config;
    std::string out;
    unsigned threads = 0;
    std::uint64_t seed = 0;
};

fbev::ToolkitConfig load(const Common& c) {
    if (c.config.empty()) return fbev::default_config();
    return fbev::load_config(c.config);
}

std::vector<std::string> camera_names(const fbev::CalibrationSet& cal) {
    std::vector<std::string> out;
    for (const auto& c : cal.cameras()) out.push_back(c.camera.name);
    return out;
}

int cmd_convert(const Common& c, const std::string& src) {
    const fbev::ToolkitConfig cfg = load(c);
    if (cfg.converter.sensors.empty())
        throw fbev::ValidationError("config: converter.cameras or converter.lidar must name at least one sensor");
    if (!fs::is_directory(src)) throw fbev::IoError(src, "source root is not a directory");
    const auto sequences = fbev::convert_source_tree(src, cfg.converter, c.threads);
    const fbev::RecordSet rs = fbev::emit_recordset(sequences, cfg.calibration);
    fbev::write_recordset(rs, c.out);
    std::cout << rs.scene.size() << " scenes, " << rs.sample.size() << " samples, " << rs.sample_annotation.size()
              << " annotations\n";
    return 0;
}

int cmd_rectify(const Common& c, bool text) {
    const fbev::ToolkitConfig cfg = load(c);
    if (cfg.rectify.fisheyes.empty()) throw fbev::ValidationError("config: rectify.fisheyes is empty");
    const fbev::RectifiedRig rig = fbev::rectify_rig(cfg.calibration, cfg.rectify.fisheyes, cfg.rectify.pinholes,
                                                     cfg.front_focal(), cfg.rectify.view, c.threads);
    const fs::path out = c.out;
    for (const auto& v : rig.views) {
        fbev::write_text_file(out / (v.view.name + ".remap"), fbev::serialize_remap_binary(v.remap));
        if (text) fbev::write_text_file(out / (v.view.name + ".remap.txt"), fbev::serialize_remap_text(v.remap));
    }
    fbev::write_text_file(out / "virtual.calib", fbev::format_calibration(rig.cameras));
    std::cout << rig.views.size() << " remap tables, " << rig.cameras.size() << " virtual cameras\n";
    return 0;
}

int cmd_coverage(const Common& c, int bins, const std::string& rig) {
    const fbev::ToolkitConfig cfg = load(c);
    std::vector<fbev::CoverageCamera> cams;
    if (rig == "original") {
        std::vector<std::string> names = cfg.rectify.pinholes;
        names.insert(names.end(), cfg.rectify.fisheyes.begin(), cfg.rectify.fisheyes.end());
        if (names.empty()) names = camera_names(cfg.calibration);
        cams = fbev::rig_coverage_cameras(cfg.calibration, names);
    } else {
        cams = fbev::rectified_coverage_cameras(cfg.calibration, cfg.rectify.fisheyes, cfg.rectify.pinholes,
                                                cfg.front_focal(), cfg.rectify.view);
    }
    const fbev::CoverageReport rep = fbev::fov_coverage(cams, bins);
    fbev::write_text_file(c.out, fbev::format_coverage_csv(rep));
    std::cout << rep.covered_bins() << "/" << rep.bins << " azimuth bins covered\n";
    return 0;
}

int cmd_lift(const Common& c, std::vector<std::string> cameras, int channels) {
    const fbev::ToolkitConfig cfg = load(c);
    if (channels < 1) throw fbev::ValidationError("--channels must be >= 1");
    if (cameras.empty()) cameras = camera_names(cfg.calibration);
    if (cameras.empty()) throw fbev::ValidationError("no cameras to lift (calibration is empty)");
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    fbev::FeatureCloud all(channels);
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const fbev::RigCamera& rig = cfg.calibration.at(cameras[i]);
        const int s = cfg.view.stride;
        fbev::FeatureImage img;
        img.rows = (rig.camera.height + s - 1) / s;
        img.cols = (rig.camera.width + s - 1) / s;
        img.channels = channels;
        img.data.resize(static_cast<std::size_t>(img.rows) * img.cols * channels);
        for (auto& v : img.data) v = uni(rng);
        all.append(fbev::lift_frustum(rig.camera, rig.cam_to_ego, s, cfg.depths, img, static_cast<std::int32_t>(i),
                                      c.threads));
    }
    fbev::write_text_file(c.out, fbev::serialize_tensor(fbev::to_tensor(all)));
    std::cout << all.size() << " points\n";
    return 0;
}

int cmd_splat(const Common& c, const std::string& in) {
    const fbev::ToolkitConfig cfg = load(c);
    const fbev::FeatureCloud cloud = fbev::cloud_from_tensor(fbev::parse_tensor(fbev::read_text_file(in)));
    const fbev::BevFeatureMap map = fbev::splat(cloud, cfg.grid(), c.threads);
    fbev::write_text_file(c.out, fbev::serialize_tensor(fbev::to_tensor(map)));
    std::cout << map.points_in_range << " of " << cloud.size() << " points splatted\n";
    return 0;
}

int cmd_encode(const Common& c, const std::string& camera, const std::string& mode) {
    const fbev::ToolkitConfig cfg = load(c);
    const fbev::RigCamera& rig = cfg.calibration.at(camera);
    const fbev::EncodingMode m = mode == "polar" ? fbev::EncodingMode::polar : fbev::EncodingMode::cartesian;
    const fbev::PositionEncodingInputs pe =
        fbev::petr_pe_inputs(rig.camera, rig.cam_to_ego, cfg.view.stride, cfg.depths, cfg.grid(), m, c.threads);
    fbev::write_text_file(c.out, fbev::serialize_tensor(fbev::to_tensor(pe, m)));
    std::cout << pe.rows << "x" << pe.cols << " pixels, " << pe.depths << " depths\n";
    return 0;
}

int cmd_evaluate(const Common& c, const std::string& detections, const std::string& recordset,
                 const std::string& strata) {
    fbev::ToolkitConfig cfg = load(c);
    cfg.evaluation.threads = c.threads;
    const fbev::RecordSet rs = fbev::read_recordset(recordset);
    const auto gts = fbev::load_ground_truth(rs, cfg.evaluation.classes);
    const auto dets =
        fbev::parse_detections(fbev::read_text_file(detections), rs, cfg.evaluation.classes, detections);
    const fbev::MetricsReport rep = fbev::evaluate(dets, gts, cfg.evaluation);
    const fs::path out = c.out;
    fbev::write_text_file(out / "metrics.json", fbev::report_to_json(rep));

    std::vector<std::pair<std::string, const fbev::StrataSpec*>> kinds;
    if (strata.empty() || strata == "distance") kinds.emplace_back("distance", &cfg.distance_strata);
    if (strata.empty() || strata == "angular") kinds.emplace_back("angular", &cfg.angular_strata);
    for (const auto& [name, spec] : kinds) {
        const fbev::StratifiedReport sr = fbev::stratified_map(dets, gts, *spec, cfg.evaluation);
        fbev::write_text_file(out / ("strata_" + name + ".json"), fbev::report_to_json(rep, &sr));
        fbev::write_text_file(out / ("strata_" + name + ".csv"), fbev::stratified_csv(sr, cfg.evaluation.classes));
    }
    std::cout << "mAP " << fbev::format_double(rep.map) << ", NDS " << fbev::format_double(rep.nds) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisheye BEV toolkit: dataset conversion, rectification, view transforms and evaluation"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool out_required) {
        sub->add_option("--config", common.config, "JSON config file");
        auto* o = sub->add_option("--out", common.out, "Output file or directory");
        if (out_required) o->required();
        sub->add_option("--threads", common.threads, "Worker cap (0 = all cores)");
    };

    std::string src;
    auto* convert = app.add_subcommand("convert", "Convert a KITTI-360 style source tree to nuScenes tables");
    add_common(convert, true);
    convert->add_option("--src", src, "Source root")->required();
    convert->get_option("--config")->required();

    bool text = false;
    auto* rectify = app.add_subcommand("rectify", "Build virtual pinhole views and remap tables");
    add_common(rectify, true);
    rectify->get_option("--config")->required();
    rectify->add_flag("--text", text, "Also write text remap tables");

    int bins = 360;
    std::string rig = "rectified";
    auto* coverage = app.add_subcommand("coverage", "Per-azimuth camera coverage table (CSV)");
    add_common(coverage, true);
    coverage->get_option("--config")->required();
    coverage->add_option("--bins", bins, "Azimuth bins")->check(CLI::Range(4, 1 << 20));
    coverage->add_option("--rig", rig, "Camera set")->check(CLI::IsMember({"original", "rectified"}));

    std::vector<std::string> cameras;
    int channels = 1;
    auto* lift = app.add_subcommand("lift", "Lift seeded random feature images into an ego-frame point cloud");
    add_common(lift, true);
    lift->get_option("--config")->required();
    lift->add_option("--camera", cameras, "Camera name (repeatable; default all)");
    lift->add_option("--channels", channels, "Feature channels");
    lift->add_option("--seed", common.seed, "Feature RNG seed");

    std::string in;
    auto* splat = app.add_subcommand("splat", "Sum-pool a point cloud tensor into the BEV grid");
    add_common(splat, true);
    splat->get_option("--config")->required();
    splat->add_option("--in", in, "Feature cloud tensor")->required();

    std::string camera;
    std::string mode = "cartesian";
    auto* encode = app.add_subcommand("encode", "Position-encoding inputs for one camera");
    add_common(encode, true);
    encode->get_option("--config")->required();
    encode->add_option("--camera", camera, "Camera name")->required();
    encode->add_option("--mode", mode, "Encoding")->check(CLI::IsMember({"cartesian", "polar"}));

    std::string detections;
    std::string recordset;
    std::string strata;
    auto* evaluate = app.add_subcommand("evaluate", "nuScenes-style metrics against a record set");
    add_common(evaluate, true);
    evaluate->add_option("--detections", detections, "Detection results JSON")->required();
    evaluate->add_option("--recordset", recordset, "Record set directory")->required();
    evaluate->add_option("--strata", strata, "Only this stratification")
        ->check(CLI::IsMember({"distance", "angular"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report("usage", e.what(), kExitValidation);
    }

    try {
        if (*convert) return cmd_convert(common, src);
        if (*rectify) return cmd_rectify(common, text);
        if (*coverage) return cmd_coverage(common, bins, rig);
        if (*lift) return cmd_lift(common, cameras, channels);
        if (*splat) return cmd_splat(common, in);
        if (*encode) return cmd_encode(common, camera, mode);
        if (*evaluate) return cmd_evaluate(common, detections, recordset, strata);
    } catch (const fbev::Error& e) {
        switch (e.kind()) {
            case fbev::ErrorKind::io: return report("io", e.what(), kExitIo);
            case fbev::ErrorKind::integrity: return report("integrity", e.what(), kExitIntegrity);
            case fbev::ErrorKind::domain: return report("domain", e.what(), kExitValidation);
            case fbev::ErrorKind::validation: return report("validation", e.what(), kExitValidation);
        }
    } catch (const std::filesystem::filesystem_error& e) {
        return report("io", e.what(), kExitIo);
    } catch (const std::exception& e) {
        return report("internal", e.what(), kExitValidation);
    }
    return 0;
}
