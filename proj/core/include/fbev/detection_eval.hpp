#pragma once

// nuScenes-style detection metrics without the attribute error: class AP
// over center-distance thresholds, TP errors, NDS, and per-stratum mAP.

#include "fbev/geometry.hpp"
#include "fbev/recordset.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace fbev {

/// One box as seen by the evaluator. `translation` may be in any frame
/// shared by all boxes of a sample (matching only uses xy differences);
/// `ego_translation` drives stratification.
struct EvalBox {
    std::string sample_token;
    std::string name;
    Vec3 translation = Vec3::Zero();
    Vec3 ego_translation = Vec3::Zero();
    Vec3 size = Vec3::Ones();  // w, l, h
    double yaw = 0.0;
    Vec2 velocity = Vec2::Zero();
    double score = -1.0;  // detections only
};

inline constexpr std::size_t kRecallPoints = 101;
inline constexpr double kMinRecall = 0.1;
inline constexpr double kMinPrecision = 0.1;

/// Precision, confidence and cumulative-mean TP errors sampled at 101
/// evenly spaced recall values.
struct MetricData {
    std::vector<double> recall, precision, confidence;
    std::vector<double> trans_err, vel_err, scale_err, orient_err;

    static MetricData no_predictions();
    /// Index of the last nonzero confidence, 0 if none.
    std::size_t max_recall_index() const;
};

struct MatchPair {
    std::size_t det = 0;  // index into the detection list
    std::size_t gt = 0;   // index into the ground-truth list
    double distance = 0.0;
};

struct Accumulation {
    MetricData data;
    std::vector<MatchPair> matches;  // in processing order
};

/// Greedy matching of one class at one threshold. Detections are visited
/// by descending score (ties: later index first); each takes the closest
/// untaken gt of the same sample (ties: lower index) if strictly closer
/// than the threshold.
Accumulation accumulate(const std::vector<EvalBox>& gts, const std::vector<EvalBox>& dets,
                        const std::string& class_name, double threshold);

/// numpy.interp semantics with explicit out-of-range values.
std::vector<double> interp(const std::vector<double>& x, const std::vector<double>& xp,
                           const std::vector<double>& fp, double left, double right);
/// Running mean ignoring NaN; all-NaN input gives ones.
std::vector<double> cummean(const std::vector<double>& x);

double calc_ap(const MetricData& md, double min_recall = kMinRecall, double min_precision = kMinPrecision);
double calc_tp(const MetricData& md, const std::vector<double>& errors, double min_recall = kMinRecall);

struct ApResult {
    std::vector<double> thresholds;
    std::vector<double> ap;
    std::vector<std::vector<MatchPair>> matches;  // per threshold
};

ApResult match_and_ap(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts,
                      const std::string& class_name, const std::vector<double>& thresholds);

struct TpErrors {
    double ate = 1.0;  // m
    double ase = 1.0;  // 1 - aligned IoU
    double aoe = 1.0;  // rad
    double ave = 1.0;  // m/s
};

/// TP errors of one class at the given match threshold (2 m by default).
TpErrors tp_errors(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts,
                   const std::string& class_name, double threshold = 2.0);

double center_distance(const EvalBox& a, const EvalBox& b);
double scale_iou(const EvalBox& a, const EvalBox& b);
/// |yaw difference| wrapped by `period`, in [0, pi].
double yaw_diff(const EvalBox& gt, const EvalBox& det, double period = kTwoPi);

/// (5 mAP + sum of (1 - min(1, err))) / 9.
double nds(double map, double mate, double mase, double maoe, double mave);

struct EvalConfig {
    std::vector<std::string> classes;
    std::vector<double> thresholds{0.5, 1.0, 2.0, 4.0};
    double tp_threshold = 2.0;
    unsigned threads = 1;

    /// The ten evaluation classes with the default thresholds.
    static EvalConfig defaults();
};

struct ClassMetrics {
    std::vector<double> ap;  // per threshold
    double mean_ap = 0.0;
    TpErrors tp;
    std::size_t n_gt = 0;
    std::size_t n_det = 0;
};

struct MetricsReport {
    std::vector<double> thresholds;
    std::map<std::string, ClassMetrics> classes;
    double map = 0.0;
    double mate = 1.0, mase = 1.0, maoe = 1.0, mave = 1.0;
    double nds = 0.0;
    std::size_t n_gt = 0;
    std::size_t n_det = 0;
    std::size_t evaluated_classes = 0;  // classes with at least one gt
};

/// Classes without ground truth are left out of mAP and the mean TP errors;
/// with no such class at all, mAP = 0 and every mean error is 1.
MetricsReport evaluate(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts, const EvalConfig& config);

/// A stratum is a union of half-open intervals [lo, hi): meters of ego xy
/// distance, or degrees of ego azimuth (counter-clockwise from +x, taken
/// modulo 360).
enum class StratumKind { distance, angular };

struct Stratum {
    std::string name;
    std::vector<std::array<double, 2>> intervals;
};

struct StrataSpec {
    StratumKind kind = StratumKind::distance;
    std::vector<Stratum> strata;

    /// Throws ValidationError on empty or overlapping intervals.
    void validate() const;
    /// Index of the stratum containing the box, or -1.
    int assign(const EvalBox& box) const;

    static StrataSpec distance_bins();   // 0-10, ..., 40-50 m
    static StrataSpec angular_sectors(); // front, back, sides
};

struct StratumReport {
    std::string name;
    MetricsReport report;
};

struct StratifiedReport {
    StratumKind kind = StratumKind::distance;
    std::vector<StratumReport> strata;
    std::size_t unassigned_gt = 0;
    std::size_t unassigned_det = 0;
};

/// Filters gts and detections by their own ego positions and runs the full
/// pipeline per stratum.
StratifiedReport stratified_map(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts,
                                const StrataSpec& strata, const EvalConfig& config);

/// Ground truth of the evaluation classes from a record set. Velocity comes
/// from the neighbouring annotations of the instance ((0, 0) for singletons).
std::vector<EvalBox> load_ground_truth(const RecordSet& rs, const std::vector<std::string>& classes);

/// nuScenes submission JSON: {"meta": {...}, "results": {sample_token:
/// [{sample_token, translation, size, rotation, velocity, detection_name,
/// detection_score}]}} in the global frame. Velocity is optional ((0, 0)).
/// Unknown sample tokens throw IntegrityError listing every offender.
std::vector<EvalBox> parse_detections(const std::string& text, const RecordSet& rs,
                                      const std::vector<std::string>& classes,
                                      const std::string& source_name = "<detections>");

std::string report_to_json(const MetricsReport& report, const StratifiedReport* strata = nullptr);
/// One row per stratum: stratum,n_gt,n_det,mAP,NDS,<class APs...>.
std::string stratified_csv(const StratifiedReport& report, const std::vector<std::string>& classes);

}  // namespace fbev
