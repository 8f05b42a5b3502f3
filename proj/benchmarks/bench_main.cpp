#include "fbev/camera.hpp"
#include "fbev/detection_eval.hpp"
#include "fbev/rectification.hpp"
#include "fbev/view_transform.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fbev;

namespace {

MeiCamera fisheye() {
    MeiCamera c;
    c.name = "image_02";
    c.xi = 2.2134047507854890;
    c.k1 = 1.6798235660113681e-02;
    c.k2 = 1.6548773243373522;
    c.fx = 1.3363220825849971e+03;
    c.fy = 1.3357883350012958e+03;
    c.cx = 7.1694323510126321e+02;
    c.cy = 7.0576498308221585e+02;
    c.width = 1400;
    c.height = 1400;
    return c;
}

void BM_ProjectMei(benchmark::State& state) {
    const MeiCamera cam = fisheye();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    std::vector<Vec3> pts(4096);
    for (auto& p : pts) p = Vec3(d(rng), d(rng), 1.0 + std::abs(d(rng)));
    for (auto _ : state)
        for (const auto& p : pts) benchmark::DoNotOptimize(project_mei(cam, p));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pts.size()));
}
BENCHMARK(BM_ProjectMei);

void BM_UnprojectMei(benchmark::State& state) {
    const MeiCamera cam = fisheye();
    for (auto _ : state)
        for (int v = 0; v < cam.height; v += 16)
            for (int u = 0; u < cam.width; u += 16) benchmark::DoNotOptimize(try_unproject_mei(cam, Vec2(u, v)));
    state.SetItemsProcessed(state.iterations() * (cam.width / 16 + 1) * (cam.height / 16 + 1));
}
BENCHMARK(BM_UnprojectMei);

void BM_BuildRemap(benchmark::State& state) {
    RigCamera rc;
    rc.camera = fisheye();
    rc.cam_to_ego = Pose(Quaternion(0.5, -0.5, 0.5, -0.5), Vec3(0.8, 1.0, 1.5));
    const auto views = make_virtual_cameras(rc, 552.554261);
    for (auto _ : state) benchmark::DoNotOptimize(build_remap(rc.camera, views[0], static_cast<unsigned>(state.range(0))));
}
BENCHMARK(BM_BuildRemap)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_Splat(benchmark::State& state) {
    const BevGrid grid = BevGrid::polar(51.2, 128, 64, -5.0, 3.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> xy(-50.0, 50.0), z(-4.0, 2.0), f(-1.0, 1.0);
    FeatureCloud cloud(16);
    std::vector<double> feat(16);
    for (int i = 0; i < 100000; ++i) {
        for (auto& v : feat) v = f(rng);
        cloud.add(Vec3(xy(rng), xy(rng), z(rng)), feat, 0);
    }
    for (auto _ : state) benchmark::DoNotOptimize(splat(cloud, grid, static_cast<unsigned>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_Splat)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> xy(-40.0, 40.0), s(0.0, 1.0);
    const auto classes = EvalConfig::defaults().classes;
    std::vector<EvalBox> gts, dets;
    for (int i = 0; i < 5000; ++i) {
        EvalBox b;
        b.sample_token = "s" + std::to_string(i % 200);
        b.name = classes[static_cast<std::size_t>(i) % classes.size()];
        b.translation = b.ego_translation = Vec3(xy(rng), xy(rng), 0.0);
        b.size = Vec3(2.0, 4.0, 1.5);
        gts.push_back(b);
        b.translation += Vec3(s(rng), s(rng), 0.0);
        b.score = s(rng);
        dets.push_back(b);
    }
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(dets, gts, EvalConfig::defaults()));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
