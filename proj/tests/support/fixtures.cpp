#include "fixtures.hpp"

#include "fbev/config.hpp"
#include "fbev/converter.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace testing_support {

std::filesystem::path fixture_dir() { return FBEV_FIXTURE_DIR; }

std::filesystem::path mini_kitti360_dir() { return fixture_dir() / "mini_kitti360"; }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
        path_ = base / (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        if (std::filesystem::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

fbev::MeiCamera kitti360_fisheye() {
    fbev::MeiCamera c;
    c.name = "image_02";
    c.xi = 2.2134047507854890;
    c.k1 = 0.016798235660113681;
    c.k2 = 1.6548773243373522;
    c.fx = 1336.3220825849971;
    c.fy = 1335.7883350012958;
    c.cx = 716.94323510126321;
    c.cy = 705.76498308221585;
    c.width = 1400;
    c.height = 1400;
    return c;
}

fbev::MeiCamera kitti360_pinhole() {
    return fbev::MeiCamera::pinhole(552.554261, 552.554261, 682.049453, 238.769549, 1408, 376);
}

fbev::CalibrationSet mini_rig() { return fbev::load_calibration(mini_kitti360_dir() / "rig.calib"); }

fbev::RecordSet convert_mini_fixture(unsigned threads) {
    const fbev::ToolkitConfig cfg = fbev::load_config(mini_kitti360_dir() / "config.json");
    const auto sequences = fbev::convert_source_tree(mini_kitti360_dir() / "source", cfg.converter, threads);
    return fbev::emit_recordset(sequences, cfg.calibration);
}

std::filesystem::path golden_dir() { return mini_kitti360_dir() / "golden"; }

}  // namespace testing_support
