// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1).

#include "fbev/camera.hpp"
#include "fbev/config.hpp"
#include "fbev/converter.hpp"
#include "fbev/detection_eval.hpp"
#include "fbev/parallel.hpp"
#include "fbev/polar_bev.hpp"
#include "fbev/recordset.hpp"
#include "fbev/rectification.hpp"
#include "fbev/view_transform.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

using namespace fbev;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        o.pass = false;
        o.detail += " (over the " + std::to_string(budget_s) + " s budget)";
    }
    if (!o.pass) ++g_failures;
    std::printf("[%s] %d %s: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

Outcome nds_reproduction() {
    int ok = 0;
    double worst = 0.0;
    for (const auto& r : oracle::published_results()) {
        const double dev = std::abs(nds(r.map, r.mate, r.mase, r.maoe, r.mave) - r.nds);
        worst = std::max(worst, dev);
        ok += dev <= 0.01;
    }
    const int n = static_cast<int>(oracle::published_results().size());
    return {ok == n && n == 15,
            std::to_string(ok) + "/" + std::to_string(n) + " rows within 0.01, max deviation " + fmt("%.4f", worst)};
}

Outcome pinhole_reduction() {
    MeiCamera cam = testing_support::kitti360_fisheye();
    cam.xi = 0.0;
    cam.k1 = 0.0;
    cam.k2 = 0.0;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, cam.width), v(0.0, cam.height), z(0.1, 100.0);
    double worst = 0.0;
    int invalid = 0;
    for (int i = 0; i < 100000; ++i) {
        const double depth = z(rng);
        const Vec3 p((u(rng) - cam.cx) / cam.fx * depth, (v(rng) - cam.cy) / cam.fy * depth, depth);
        const auto r = project_mei(cam, p);
        if (!r.valid) ++invalid;
        const double eu = cam.fx * p.x() / p.z() + cam.cx;
        const double ev = cam.fy * p.y() / p.z() + cam.cy;
        worst = std::max({worst, std::abs(r.pixel.x() - eu), std::abs(r.pixel.y() - ev)});
    }
    return {worst <= 1e-10 && invalid == 0,
            "100000 points, max |error| " + fmt("%.3g", worst) + " px, " + std::to_string(invalid) + " rejected"};
}

Outcome round_trip() {
    const MeiCamera base = testing_support::kitti360_fisheye();
    double worst = 0.0;
    std::size_t checked = 0, skipped = 0;
    std::ostringstream per;
    for (double xi : {0.5, 1.0, 2.0}) {
        for (double k1 : {-0.2, 0.0, 0.2}) {
            MeiCamera cam = base;
            cam.xi = xi;
            cam.k1 = k1;
            cam.k2 = 0.0;
            std::mutex m;
            std::size_t ok = 0, bad = 0;
            double w = 0.0;
            parallel_for_chunks(static_cast<std::size_t>(cam.height), 0, [&](std::size_t b, std::size_t e) {
                std::size_t lok = 0, lbad = 0;
                double lw = 0.0;
                for (std::size_t v = b; v < e; ++v) {
                    for (int u = 0; u < cam.width; ++u) {
                        const Vec2 px(u, static_cast<double>(v));
                        const auto r = try_unproject_mei(cam, px);
                        if (!r.ok()) {
                            ++lbad;
                            continue;
                        }
                        // border pixels may land a few ulps outside the image, so
                        // judge the pixel error rather than the in-image flag
                        const auto back = project_mei(cam, r.ray);
                        lw = std::max(lw, back.behind ? 1e9 : (back.pixel - px).norm());
                        ++lok;
                    }
                }
                std::lock_guard<std::mutex> lock(m);
                ok += lok;
                bad += lbad;
                w = std::max(w, lw);
            });
            checked += ok;
            skipped += bad;
            worst = std::max(worst, w);
            if (ok == 0) worst = 1e9;
        }
    }
    return {worst <= 1e-6, std::to_string(checked) + " pixels over 9 (xi, k1) pairs, max error " +
                               fmt("%.3g", worst) + " px, " + std::to_string(skipped) +
                               " pixels outside the model"};
}

Outcome rectification() {
    const CalibrationSet rig = testing_support::mini_rig();
    const double focal = rig.at("image_00").camera.fx;
    bool ok = true;
    double worst = 0.0, worst_axis = 0.0;
    std::size_t valid = 0;
    for (const char* name : {"image_02", "image_03"}) {
        const RigCamera& fe = rig.at(name);
        const auto views = make_virtual_cameras(fe, focal);
        ok = ok && views[0].yaw_deg == 30.0 && views[1].yaw_deg == -46.0 && views[0].pitch_deg == -4.0 &&
             views[1].pitch_deg == -4.0 && views[0].width == 704 && views[0].height == 376;
        const Vec3 fisheye_axis = fe.cam_to_ego.rotation().rotate(Vec3::UnitZ());
        const double fisheye_az = std::atan2(fisheye_axis.y(), fisheye_axis.x());
        for (const auto& v : views) {
            // realized angles measured in the ego frame
            const Vec3 axis = compose(fe.cam_to_ego, v.mount).rotation().rotate(Vec3::UnitZ());
            const double pitch = rad_to_deg(std::asin(axis.z()));
            double turn = rad_to_deg(wrap_pi(std::atan2(axis.y(), axis.x()) - fisheye_az));
            // positive yaw turns toward the front: left camera turns clockwise
            if (fisheye_az > 0.0) turn = -turn;
            worst_axis = std::max({worst_axis, std::abs(turn - v.yaw_deg), std::abs(pitch - v.pitch_deg)});
            const RemapTable t = build_remap(fe.camera, v);
            const MeiCamera pin = v.as_camera();
            const Quaternion to_virtual = v.mount.rotation().conjugate();
            for (int y = 0; y < t.height; ++y)
                for (int x = 0; x < t.width; ++x) {
                    const std::size_t i = t.index(x, y);
                    if (!t.valid[i]) continue;
                    ++valid;
                    const auto r = try_unproject_mei(fe.camera, t.source[i]);
                    if (!r.ok()) {
                        worst = 1e9;
                        continue;
                    }
                    const auto back = project_mei(pin, to_virtual.rotate(r.ray));
                    worst = std::max(worst, (back.pixel - Vec2(x, y)).norm());
                }
        }
    }
    ok = ok && worst <= 1e-6 && worst_axis <= 1e-9 && valid > 0;
    return {ok, "yaw +30/-46, pitch -4 on 704x376 (realized angle error " + fmt("%.2g", worst_axis) + " deg), " +
                    std::to_string(valid) + " valid entries, max reprojection error " + fmt("%.3g", worst) + " px"};
}

Outcome splat_oracle() {
    const BevGrid grid = BevGrid::polar(40.0, 8, 4, -3.0, 5.0);
    const int channels = 4;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> xy(-45.0, 45.0), z(-4.0, 6.0), f(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-10, 10);
    std::vector<oracle::SplatPoint> pts;
    FeatureCloud cloud(channels);
    for (int i = 0; i < 10000; ++i) {
        oracle::SplatPoint p{xy(rng), xy(rng), z(rng), {}};
        for (int c = 0; c < channels; ++c) p.feature.push_back(std::ldexp(f(rng), ex(rng)));
        cloud.add(Vec3(p.x, p.y, p.z), p.feature, 0);
        pts.push_back(std::move(p));
    }
    const BevFeatureMap map = splat(cloud, grid, 0);
    const auto expected = oracle::polar_splat(pts, channels, 40.0, 8, 4, -3.0, 5.0);
    const bool bitwise = map.data.size() == expected.size() &&
                         std::memcmp(map.data.data(), expected.data(), expected.size() * sizeof(double)) == 0;
    double worst_rel = 0.0;
    for (int c = 0; c < channels; ++c) {
        std::vector<double> in_range, binned;
        for (const auto& p : pts)
            if (p.z >= -3.0 && p.z < 5.0 && std::hypot(p.x, p.y) < 40.0)
                in_range.push_back(p.feature[static_cast<std::size_t>(c)]);
        for (std::size_t b = 0; b < map.bins(); ++b) binned.push_back(map.at(c, b));
        double scale = 0.0;
        for (double v : in_range) scale += std::abs(v);
        worst_rel = std::max(worst_rel, std::abs(oracle::fsum(binned) - oracle::fsum(in_range)) / scale);
    }
    return {bitwise && worst_rel <= 1e-6, std::string(bitwise ? "bitwise equal" : "MISMATCH") + " to the oracle on " +
                                             std::to_string(map.points_in_range) +
                                             " in-range points, max relative mass error " + fmt("%.2g", worst_rel)};
}

Outcome wrap_continuity() {
    const BevGrid grid = BevGrid::polar(51.2, 64, 32, -5.0, 3.0);
    double worst = 0.0;
    for (double rho : {0.5, 10.0, 25.0, 51.0})
        for (double z : {-4.0, 0.0, 2.5}) {
            const auto a = encode_polar(cyl_to_cart({rho, 1e-6, z}), grid);
            const auto b = encode_polar(cyl_to_cart({rho, kTwoPi - 1e-6, z}), grid);
            for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(a.v[k] - b.v[k]));
        }
    return {worst < 1e-5, "max |difference| " + fmt("%.3g", worst)};
}

Outcome converter_golden() {
    namespace fs = std::filesystem;
    const auto first = serialize_recordset(testing_support::convert_mini_fixture(1));
    std::size_t same = 0, total = 0;
    for (const auto& e : fs::directory_iterator(testing_support::golden_dir())) {
        ++total;
        const auto it = first.find(e.path().filename().string());
        same += it != first.end() && it->second == testing_support::read_file(e.path());
    }
    const RecordSet rs = parse_recordset(first);
    validate_integrity(rs);
    const bool idempotent = serialize_recordset(testing_support::convert_mini_fixture(4)) == first &&
                            serialize_recordset(rs) == first;
    const bool counts = rs.scene.size() == 2 && rs.sample.size() == 5 && rs.sample_annotation.size() == 7;
    std::string detail = std::to_string(same) + "/" + std::to_string(total) + " golden files byte-identical, " +
                         "integrity ok, " + (idempotent ? "re-run idempotent" : "NOT idempotent");
    bool full_ok = true;
    if (const char* root = std::getenv("FBEV_KITTI360_ROOT")) {
        const char* cfg_path = std::getenv("FBEV_KITTI360_CONFIG");
        const ToolkitConfig cfg = load_config(cfg_path ? cfg_path : "config.json");
        const auto seqs = convert_source_tree(root, cfg.converter, 0);
        std::map<std::string, std::pair<std::size_t, std::size_t>> by_split;
        for (const auto& s : seqs) {
            by_split[s.split].first += s.sample_count();
            by_split[s.split].second += s.scenes.size();
        }
        full_ok = by_split["train"] == std::make_pair<std::size_t, std::size_t>(55526, 258) &&
                  by_split["val"] == std::make_pair<std::size_t, std::size_t>(8554, 41);
        detail += "; full dataset train " + std::to_string(by_split["train"].first) + "/" +
                  std::to_string(by_split["train"].second) + ", val " + std::to_string(by_split["val"].first) +
                  "/" + std::to_string(by_split["val"].second);
    } else {
        detail += "; full-dataset counts SKIPPED (FBEV_KITTI360_ROOT not set)";
    }
    return {same == total && total == first.size() && idempotent && counts && full_ok, detail};
}

Outcome evaluation_oracle() {
    std::mt19937_64 rng(99);
    const std::vector<std::string> classes{"car", "pedestrian", "pole"};
    const std::vector<double> thresholds{0.5, 1.0, 2.0, 4.0};
    std::uniform_int_distribution<int> count(0, 5), coord(-6, 6), smp(0, 2), sc(1, 5);
    std::size_t fixtures = 0, mismatches = 0;
    double worst_ap = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<EvalBox> gts, dets;
        for (const auto& cls : classes) {
            for (int i = count(rng); i > 0; --i) {
                EvalBox b;
                b.sample_token = "s" + std::to_string(smp(rng));
                b.name = cls;
                b.translation = Vec3(0.5 * coord(rng), 0.5 * coord(rng), 0.0);
                gts.push_back(b);
            }
            for (int i = count(rng); i > 0; --i) {
                EvalBox b;
                b.sample_token = "s" + std::to_string(smp(rng));
                b.name = cls;
                b.translation = Vec3(0.5 * coord(rng), 0.5 * coord(rng), 0.0);
                b.score = 0.2 * sc(rng);
                dets.push_back(b);
            }
        }
        for (const auto& cls : classes) {
            std::vector<std::size_t> det_idx;
            std::vector<oracle::Box2> og, od;
            std::size_t n_gt = 0;
            for (const auto& g : gts)
                if (g.name == cls) {
                    og.push_back({g.sample_token, g.translation.x(), g.translation.y(), 0.0});
                    ++n_gt;
                }
            for (std::size_t i = 0; i < dets.size(); ++i)
                if (dets[i].name == cls) {
                    det_idx.push_back(i);
                    od.push_back({dets[i].sample_token, dets[i].translation.x(), dets[i].translation.y(), dets[i].score});
                }
            ++fixtures;
            const ApResult r = match_and_ap(dets, gts, cls, thresholds);
            const auto order = oracle::detection_order(od);
            for (std::size_t t = 0; t < thresholds.size(); ++t) {
                const auto expect = oracle::exhaustive_assignment(og, od, thresholds[t]);
                std::vector<int> got(od.size(), -1);
                for (const auto& m : r.matches[t]) {
                    const auto pos = std::find(det_idx.begin(), det_idx.end(), m.det) - det_idx.begin();
                    // gt index within the class list
                    int gi = -1, k = 0;
                    for (std::size_t g = 0; g < gts.size(); ++g)
                        if (gts[g].name == cls) {
                            if (g == m.gt) gi = k;
                            ++k;
                        }
                    got[static_cast<std::size_t>(pos)] = gi;
                }
                if (got != expect) ++mismatches;
                std::vector<bool> tp;
                for (std::size_t d : order) tp.push_back(expect[d] >= 0);
                worst_ap = std::max(worst_ap, std::abs(r.ap[t] - oracle::average_precision(tp, n_gt)));
            }
        }
    }

    // perfect detections
    std::vector<EvalBox> gts;
    std::uniform_real_distribution<double> u(-48.0, 48.0), yaw(-3.0, 3.0);
    const auto all = EvalConfig::defaults().classes;
    for (int i = 0; i < 200; ++i) {
        EvalBox b;
        b.sample_token = "s" + std::to_string(i % 9);
        b.name = all[static_cast<std::size_t>(i) % all.size()];
        do {
            b.translation = Vec3(u(rng), u(rng), 0.0);
        } while (b.translation.head<2>().norm() >= 50.0);
        b.ego_translation = b.translation;
        b.size = Vec3(1.0 + i % 3, 2.0, 1.5);
        b.yaw = yaw(rng);
        b.velocity = Vec2(u(rng) * 0.1, u(rng) * 0.1);
        gts.push_back(b);
    }
    std::vector<EvalBox> perfect = gts;
    for (auto& d : perfect) d.score = 0.5;
    const MetricsReport rep = evaluate(perfect, gts, EvalConfig::defaults());
    const bool perfect_ok = std::abs(rep.map - 1.0) < 1e-12 && std::abs(rep.nds - 1.0) < 1e-12;

    // strata partition the ground truth
    bool sums_ok = true;
    for (const StrataSpec& spec : {StrataSpec::distance_bins(), StrataSpec::angular_sectors()}) {
        const StratifiedReport s = stratified_map(perfect, gts, spec, EvalConfig::defaults());
        std::size_t n = 0;
        for (const auto& st : s.strata) n += st.report.n_gt;
        sums_ok = sums_ok && n == gts.size() && s.unassigned_gt == 0;
    }
    return {mismatches == 0 && worst_ap <= 1e-12 && perfect_ok && sums_ok,
            std::to_string(fixtures) + " class fixtures x 4 thresholds, " + std::to_string(mismatches) +
                " assignment mismatches, max AP deviation " + fmt("%.2g", worst_ap) + "; perfect input mAP " +
                fmt("%.15g", rep.map) + " NDS " + fmt("%.15g", rep.nds) + "; strata sums " +
                (sums_ok ? "match totals" : "DO NOT match totals")};
}

}  // namespace

int main() {
    criterion(1, "NDS reproduction", 1.0, nds_reproduction);
    criterion(2, "MEI pinhole reduction", 5.0, pinhole_reduction);
    criterion(3, "projection round-trip", 30.0, round_trip);
    criterion(4, "rectification geometry", 60.0, rectification);
    criterion(5, "polar splat oracle", 10.0, splat_oracle);
    criterion(6, "wrap-around continuity", 1.0, wrap_continuity);
    criterion(7, "converter golden fixture", 5.0, converter_golden);
    criterion(8, "evaluation oracle", 10.0, evaluation_oracle);
    std::printf("%d of 8 criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
