#pragma once

// nuScenes-format tables with deterministic content-hash tokens.
//
// One JSON file per table (<table>.json, an array sorted by token) plus
// splits.json mapping split name -> scene names. Quaternions are stored
// [w, x, y, z]; timestamps are integer microseconds. Empty prev/next
// references are "".

#include "fbev/calibration.hpp"
#include "fbev/converter.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fbev {

struct LogRow {
    std::string token, logfile, vehicle, date_captured, location;
};

struct SceneRow {
    std::string token, log_token, name, description;
    int nbr_samples = 0;
    std::string first_sample_token, last_sample_token;
};

struct SampleRow {
    std::string token;
    std::int64_t timestamp = 0;
    std::string prev, next, scene_token;
};

struct SampleDataRow {
    std::string token, sample_token, ego_pose_token, calibrated_sensor_token;
    std::string filename, fileformat;
    int width = 0, height = 0;
    std::int64_t timestamp = 0;
    bool is_key_frame = true;
    std::string prev, next;
};

struct EgoPoseRow {
    std::string token;
    std::int64_t timestamp = 0;
    std::array<double, 4> rotation{1, 0, 0, 0};
    std::array<double, 3> translation{0, 0, 0};
};

/// Camera rows carry the MEI parameters as extension fields: camera_model
/// "mei" or "pinhole", xi, distortion [k1, k2]. LiDAR rows use "none" with
/// an empty intrinsic matrix.
struct CalibratedSensorRow {
    std::string token, sensor_token;
    std::array<double, 3> translation{0, 0, 0};
    std::array<double, 4> rotation{1, 0, 0, 0};
    std::vector<std::vector<double>> camera_intrinsic;
    std::string camera_model;
    double xi = 0.0;
    std::vector<double> distortion;
};

struct SensorRow {
    std::string token, channel, modality;
};

struct SampleAnnotationRow {
    std::string token, sample_token, instance_token, visibility_token;
    std::vector<std::string> attribute_tokens;
    std::array<double, 3> translation{0, 0, 0};
    std::array<double, 3> size{1, 1, 1};  // w, l, h
    std::array<double, 4> rotation{1, 0, 0, 0};
    std::string prev, next;
    int num_lidar_pts = 0;
    int num_radar_pts = 0;
};

struct InstanceRow {
    std::string token, category_token;
    int nbr_annotations = 0;
    std::string first_annotation_token, last_annotation_token;
};

struct CategoryRow {
    std::string token, name, description;
    bool extension = false;
};

struct AttributeRow {
    std::string token, name, description;
};

struct VisibilityRow {
    std::string token, level, description;
};

struct RecordSet {
    std::vector<LogRow> log;
    std::vector<SceneRow> scene;
    std::vector<SampleRow> sample;
    std::vector<SampleDataRow> sample_data;
    std::vector<EgoPoseRow> ego_pose;
    std::vector<CalibratedSensorRow> calibrated_sensor;
    std::vector<SensorRow> sensor;
    std::vector<SampleAnnotationRow> sample_annotation;
    std::vector<InstanceRow> instance;
    std::vector<CategoryRow> category;
    std::vector<AttributeRow> attribute;
    std::vector<VisibilityRow> visibility;
    std::map<std::string, std::vector<std::string>> splits;

    /// Sorts every table by token and each split's scene list by name.
    void sort();
};

/// Table file names in write order, without the splits file.
const std::vector<std::string>& recordset_tables();

/// First 32 hex digits of SHA-256(key).
std::string make_token(const std::string& key);

/// Visibility token ("1".."4") for a visible fraction in [0, 1].
std::string visibility_token(double fraction);

/// Builds the tables from converted sequences. Sensors found in the
/// calibration set are cameras; others are treated as LiDAR mounted at the
/// ego origin. Validates integrity before returning.
RecordSet emit_recordset(const std::vector<ConvertedSequence>& sequences, const CalibrationSet& calibration);

/// Throws IntegrityError naming the first offending token: duplicate or
/// empty tokens, unresolved references, samples not reachable exactly once
/// from their scene's chain, or non-increasing timestamps within a scene.
void validate_integrity(const RecordSet& rs);

/// File name -> content; byte-identical for identical record sets.
std::map<std::string, std::string> serialize_recordset(const RecordSet& rs);
void write_recordset(const RecordSet& rs, const std::filesystem::path& dir);
/// Reads and validates a directory written by write_recordset.
RecordSet read_recordset(const std::filesystem::path& dir);
RecordSet parse_recordset(const std::map<std::string, std::string>& files);

}  // namespace fbev
