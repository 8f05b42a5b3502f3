#include "fbev/recordset.hpp"

#include "fbev/class_map.hpp"
#include "fbev/errors.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace fbev {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LogRow, token, logfile, vehicle, date_captured, location)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SceneRow, token, log_token, name, description, nbr_samples,
                                   first_sample_token, last_sample_token)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SampleRow, token, timestamp, prev, next, scene_token)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SampleDataRow, token, sample_token, ego_pose_token, calibrated_sensor_token,
                                   filename, fileformat, width, height, timestamp, is_key_frame, prev, next)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EgoPoseRow, token, timestamp, rotation, translation)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CalibratedSensorRow, token, sensor_token, translation, rotation,
                                   camera_intrinsic, camera_model, xi, distortion)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SensorRow, token, channel, modality)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SampleAnnotationRow, token, sample_token, instance_token, visibility_token,
                                   attribute_tokens, translation, size, rotation, prev, next, num_lidar_pts,
                                   num_radar_pts)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(InstanceRow, token, category_token, nbr_annotations, first_annotation_token,
                                   last_annotation_token)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CategoryRow, token, name, description, extension)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AttributeRow, token, name, description)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(VisibilityRow, token, level, description)

namespace {

template <class Row>
void sort_rows(std::vector<Row>& rows) {
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.token < b.token; });
}

std::int64_t to_micros(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1e6)); }

// Adding 0.0 turns -0.0 into +0.0 so files do not depend on the sign of zero.
std::array<double, 3> arr3(const Vec3& v) { return {v.x() + 0.0, v.y() + 0.0, v.z() + 0.0}; }

std::array<double, 4> arr4(const Quaternion& q) {
    auto a = q.wxyz();
    for (auto& v : a) v += 0.0;
    return a;
}

std::string frame_name(long long frame) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%010lld", frame);
    return buf;
}

const char* kVisibilityLevels[4][2] = {
    {"v0-40", "visibility of whole object is between 0 and 40%"},
    {"v40-60", "visibility of whole object is between 40 and 60%"},
    {"v60-80", "visibility of whole object is between 60 and 80%"},
    {"v80-100", "visibility of whole object is between 80 and 100%"},
};

}  // namespace

void RecordSet::sort() {
    sort_rows(log);
    sort_rows(scene);
    sort_rows(sample);
    sort_rows(sample_data);
    sort_rows(ego_pose);
    sort_rows(calibrated_sensor);
    sort_rows(sensor);
    sort_rows(sample_annotation);
    sort_rows(instance);
    sort_rows(category);
    sort_rows(attribute);
    sort_rows(visibility);
    for (auto& [name, scenes] : splits) std::sort(scenes.begin(), scenes.end());
}

const std::vector<std::string>& recordset_tables() {
    static const std::vector<std::string> names = {
        "attribute", "calibrated_sensor", "category", "ego_pose", "instance", "log",
        "sample", "sample_annotation", "sample_data", "scene", "sensor", "visibility",
    };
    return names;
}

std::string make_token(const std::string& key) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(key.data(), key.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::domain, "make_token: SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (unsigned int i = 0; i < 16; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string visibility_token(double fraction) {
    if (fraction < 0.4) return "1";
    if (fraction < 0.6) return "2";
    if (fraction < 0.8) return "3";
    return "4";
}

RecordSet emit_recordset(const std::vector<ConvertedSequence>& sequences, const CalibrationSet& calibration) {
    RecordSet rs;
    for (int i = 0; i < 4; ++i)
        rs.visibility.push_back({std::to_string(i + 1), kVisibilityLevels[i][0], kVisibilityLevels[i][1]});

    std::map<std::string, CategoryRow> categories;
    std::map<std::string, SensorRow> sensors;

    for (const auto& seq : sequences) {
        const std::string log_token = make_token("log|" + seq.id);
        rs.log.push_back({log_token, seq.id, "kitti360", "", "karlsruhe"});

        std::map<std::string, std::string> calib_tokens;
        for (const auto& name : seq.sensors) {
            const bool camera = calibration.contains(name);
            const std::string sensor_token = make_token("sensor|" + name);
            sensors.emplace(name, SensorRow{sensor_token, name, camera ? "camera" : "lidar"});

            CalibratedSensorRow cs;
            cs.token = make_token("calibrated_sensor|" + seq.id + "|" + name);
            cs.sensor_token = sensor_token;
            if (camera) {
                const RigCamera& rig = calibration.at(name);
                const MeiCamera& c = rig.camera;
                cs.translation = arr3(rig.cam_to_ego.translation());
                cs.rotation = arr4(rig.cam_to_ego.rotation());
                cs.camera_intrinsic = {{c.fx, 0.0, c.cx - c.crop_offset.x()},
                                       {0.0, c.fy, c.cy - c.crop_offset.y()},
                                       {0.0, 0.0, 1.0}};
                cs.camera_model = c.is_pinhole() ? "pinhole" : "mei";
                cs.xi = c.xi;
                cs.distortion = {c.k1, c.k2};
            } else {
                cs.camera_model = "none";
            }
            calib_tokens[name] = cs.token;
            rs.calibrated_sensor.push_back(std::move(cs));
        }

        for (const auto& scene : seq.scenes) {
            SceneRow sr;
            sr.token = make_token("scene|" + scene.name);
            sr.log_token = log_token;
            sr.name = scene.name;
            sr.description = "";
            sr.nbr_samples = static_cast<int>(scene.samples.size());
            if (!seq.split.empty()) rs.splits[seq.split].push_back(scene.name);

            std::vector<std::string> sample_tokens;
            for (const auto& s : scene.samples)
                sample_tokens.push_back(make_token("sample|" + seq.id + "|" + std::to_string(s.pose.frame)));
            sr.first_sample_token = sample_tokens.front();
            sr.last_sample_token = sample_tokens.back();

            // Annotation chains per instance, in sample order.
            std::map<std::string, std::vector<std::size_t>> chain_rows;

            for (std::size_t i = 0; i < scene.samples.size(); ++i) {
                const ConvertedSample& s = scene.samples[i];
                const std::string frame = std::to_string(s.pose.frame);
                const std::int64_t ts = to_micros(s.pose.timestamp);
                rs.sample.push_back({sample_tokens[i], ts, i > 0 ? sample_tokens[i - 1] : "",
                                     i + 1 < sample_tokens.size() ? sample_tokens[i + 1] : "", sr.token});

                const std::string ego_token = make_token("ego_pose|" + seq.id + "|" + frame);
                rs.ego_pose.push_back({ego_token, ts, arr4(s.pose.ego_to_world.rotation()),
                                       arr3(s.pose.ego_to_world.translation())});

                for (const auto& name : seq.sensors) {
                    auto sd_token = [&](std::size_t k) {
                        return make_token("sample_data|" + seq.id + "|" + name + "|" +
                                          std::to_string(scene.samples[k].pose.frame));
                    };
                    SampleDataRow sd;
                    sd.token = sd_token(i);
                    sd.sample_token = sample_tokens[i];
                    sd.ego_pose_token = ego_token;
                    sd.calibrated_sensor_token = calib_tokens.at(name);
                    const bool camera = calibration.contains(name);
                    sd.fileformat = camera ? "png" : "bin";
                    sd.filename = "samples/" + name + "/" + seq.id + "/" + frame_name(s.pose.frame) + "." +
                                  sd.fileformat;
                    if (camera) {
                        sd.width = calibration.at(name).camera.width;
                        sd.height = calibration.at(name).camera.height;
                    }
                    sd.timestamp = to_micros(s.sensor_timestamps.at(name));
                    sd.is_key_frame = true;
                    sd.prev = i > 0 ? sd_token(i - 1) : "";
                    sd.next = i + 1 < scene.samples.size() ? sd_token(i + 1) : "";
                    rs.sample_data.push_back(std::move(sd));
                }

                for (const auto& a : s.annotations) {
                    const std::string category_token = make_token("category|" + a.category);
                    if (!categories.count(a.category)) {
                        bool extension = !is_eval_class(a.category);
                        for (const auto& m : target_categories())
                            if (m.category == a.category) extension = m.extension;
                        categories.emplace(a.category, CategoryRow{category_token, a.category, "", extension});
                    }
                    SampleAnnotationRow ar;
                    ar.token = make_token("sample_annotation|" + a.instance_key + "|" + frame);
                    ar.sample_token = sample_tokens[i];
                    ar.instance_token = make_token("instance|" + a.instance_key);
                    ar.visibility_token = visibility_token(a.global.visibility);
                    ar.translation = arr3(a.global.center);
                    ar.size = arr3(a.global.size);
                    ar.rotation = arr4(a.global.orientation);
                    ar.num_lidar_pts = a.num_lidar_pts;
                    chain_rows[a.instance_key].push_back(rs.sample_annotation.size());
                    rs.sample_annotation.push_back(std::move(ar));
                }
            }

            for (const auto& [key, rows] : chain_rows) {
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    auto& row = rs.sample_annotation[rows[k]];
                    row.prev = k > 0 ? rs.sample_annotation[rows[k - 1]].token : "";
                    row.next = k + 1 < rows.size() ? rs.sample_annotation[rows[k + 1]].token : "";
                }
                const auto& first = rs.sample_annotation[rows.front()];
                InstanceRow inst;
                inst.token = first.instance_token;
                std::string category;
                for (const auto& s : scene.samples)
                    for (const auto& a : s.annotations)
                        if (a.instance_key == key) category = a.category;
                inst.category_token = make_token("category|" + category);
                inst.nbr_annotations = static_cast<int>(rows.size());
                inst.first_annotation_token = first.token;
                inst.last_annotation_token = rs.sample_annotation[rows.back()].token;
                rs.instance.push_back(std::move(inst));
            }
            rs.scene.push_back(std::move(sr));
        }
    }
    for (auto& [name, row] : categories) rs.category.push_back(std::move(row));
    for (auto& [name, row] : sensors) rs.sensor.push_back(std::move(row));

    rs.sort();
    validate_integrity(rs);
    return rs;
}

namespace {

template <class Row>
std::unordered_map<std::string, const Row*> index_table(const std::vector<Row>& rows, const char* table) {
    std::unordered_map<std::string, const Row*> idx;
    for (const auto& r : rows) {
        if (r.token.empty()) throw IntegrityError("", std::string(table) + ": empty token");
        if (!idx.emplace(r.token, &r).second) throw IntegrityError(r.token, std::string(table) + ": duplicate token");
    }
    return idx;
}

template <class Map>
void require(const Map& idx, const std::string& ref, const std::string& owner, const char* what) {
    if (!idx.count(ref)) throw IntegrityError(ref, std::string(what) + " referenced by " + owner + " does not resolve");
}

template <class Map>
void require_optional(const Map& idx, const std::string& ref, const std::string& owner, const char* what) {
    if (!ref.empty()) require(idx, ref, owner, what);
}

}  // namespace

void validate_integrity(const RecordSet& rs) {
    const auto logs = index_table(rs.log, "log");
    const auto scenes = index_table(rs.scene, "scene");
    const auto samples = index_table(rs.sample, "sample");
    const auto sample_data = index_table(rs.sample_data, "sample_data");
    const auto ego_poses = index_table(rs.ego_pose, "ego_pose");
    const auto calibs = index_table(rs.calibrated_sensor, "calibrated_sensor");
    const auto sensors = index_table(rs.sensor, "sensor");
    const auto anns = index_table(rs.sample_annotation, "sample_annotation");
    const auto instances = index_table(rs.instance, "instance");
    const auto categories = index_table(rs.category, "category");
    const auto attributes = index_table(rs.attribute, "attribute");
    const auto visibilities = index_table(rs.visibility, "visibility");

    std::unordered_set<std::string> visited;
    std::set<std::string> scene_names;
    for (const auto& sc : rs.scene) {
        require(logs, sc.log_token, sc.token, "log");
        require(samples, sc.first_sample_token, sc.token, "first sample");
        require(samples, sc.last_sample_token, sc.token, "last sample");
        scene_names.insert(sc.name);
        std::string cur = sc.first_sample_token;
        std::string prev;
        int count = 0;
        std::int64_t last_ts = 0;
        while (!cur.empty()) {
            require(samples, cur, sc.token, "sample");
            const SampleRow& s = *samples.at(cur);
            if (s.scene_token != sc.token) throw IntegrityError(cur, "sample is chained into a different scene");
            if (s.prev != prev) throw IntegrityError(cur, "sample prev does not match its chain");
            if (count > 0 && s.timestamp <= last_ts) throw IntegrityError(cur, "sample timestamps not increasing");
            if (!visited.insert(cur).second) throw IntegrityError(cur, "sample reached more than once");
            last_ts = s.timestamp;
            prev = cur;
            cur = s.next;
            ++count;
        }
        if (prev != sc.last_sample_token) throw IntegrityError(sc.token, "scene chain does not end at last sample");
        if (count != sc.nbr_samples) throw IntegrityError(sc.token, "scene nbr_samples does not match its chain");
    }
    for (const auto& s : rs.sample) {
        require(scenes, s.scene_token, s.token, "scene");
        if (!visited.count(s.token)) throw IntegrityError(s.token, "sample not reachable from its scene");
    }
    for (const auto& sd : rs.sample_data) {
        require(samples, sd.sample_token, sd.token, "sample");
        require(ego_poses, sd.ego_pose_token, sd.token, "ego_pose");
        require(calibs, sd.calibrated_sensor_token, sd.token, "calibrated_sensor");
        require_optional(sample_data, sd.prev, sd.token, "prev sample_data");
        require_optional(sample_data, sd.next, sd.token, "next sample_data");
    }
    for (const auto& cs : rs.calibrated_sensor) require(sensors, cs.sensor_token, cs.token, "sensor");
    for (const auto& a : rs.sample_annotation) {
        require(samples, a.sample_token, a.token, "sample");
        require(instances, a.instance_token, a.token, "instance");
        require(visibilities, a.visibility_token, a.token, "visibility");
        for (const auto& t : a.attribute_tokens) require(attributes, t, a.token, "attribute");
        require_optional(anns, a.prev, a.token, "prev annotation");
        require_optional(anns, a.next, a.token, "next annotation");
    }
    for (const auto& inst : rs.instance) {
        require(categories, inst.category_token, inst.token, "category");
        require(anns, inst.first_annotation_token, inst.token, "first annotation");
        require(anns, inst.last_annotation_token, inst.token, "last annotation");
    }
    for (const auto& [split, names] : rs.splits)
        for (const auto& n : names)
            if (!scene_names.count(n)) throw IntegrityError(n, "split '" + split + "' names an unknown scene");
}

std::map<std::string, std::string> serialize_recordset(const RecordSet& rs) {
    std::map<std::string, std::string> files;
    auto put = [&](const std::string& table, const auto& rows) {
        files[table + ".json"] = nlohmann::json(rows).dump(2) + "\n";
    };
    put("attribute", rs.attribute);
    put("calibrated_sensor", rs.calibrated_sensor);
    put("category", rs.category);
    put("ego_pose", rs.ego_pose);
    put("instance", rs.instance);
    put("log", rs.log);
    put("sample", rs.sample);
    put("sample_annotation", rs.sample_annotation);
    put("sample_data", rs.sample_data);
    put("scene", rs.scene);
    put("sensor", rs.sensor);
    put("visibility", rs.visibility);
    files["splits.json"] = nlohmann::json(rs.splits).dump(2) + "\n";
    return files;
}

void write_recordset(const RecordSet& rs, const std::filesystem::path& dir) {
    validate_integrity(rs);
    for (const auto& [name, content] : serialize_recordset(rs)) write_text_file(dir / name, content);
}

RecordSet parse_recordset(const std::map<std::string, std::string>& files) {
    RecordSet rs;
    auto get = [&](const std::string& name, auto& target) {
        const auto it = files.find(name);
        if (it == files.end()) throw ValidationError("recordset: missing " + name);
        try {
            nlohmann::json::parse(it->second).get_to(target);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(name + ": " + e.what());
        }
    };
    get("attribute.json", rs.attribute);
    get("calibrated_sensor.json", rs.calibrated_sensor);
    get("category.json", rs.category);
    get("ego_pose.json", rs.ego_pose);
    get("instance.json", rs.instance);
    get("log.json", rs.log);
    get("sample.json", rs.sample);
    get("sample_annotation.json", rs.sample_annotation);
    get("sample_data.json", rs.sample_data);
    get("scene.json", rs.scene);
    get("sensor.json", rs.sensor);
    get("visibility.json", rs.visibility);
    get("splits.json", rs.splits);
    rs.sort();
    validate_integrity(rs);
    return rs;
}

RecordSet read_recordset(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& t : recordset_tables()) files[t + ".json"] = read_text_file(dir / (t + ".json"));
    files["splits.json"] = read_text_file(dir / "splits.json");
    return parse_recordset(files);
}

}  // namespace fbev
