#include "fbev/detection_eval.hpp"

#include "fbev/class_map.hpp"
#include "fbev/errors.hpp"
#include "fbev/format.hpp"
#include "fbev/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace fbev {

MetricData MetricData::no_predictions() {
    MetricData md;
    md.recall.resize(kRecallPoints);
    // same values as numpy.linspace(0, 1, 101): i * step, last point exactly 1
    const double step = 1.0 / static_cast<double>(kRecallPoints - 1);
    for (std::size_t i = 0; i < kRecallPoints; ++i) md.recall[i] = static_cast<double>(i) * step;
    md.recall.back() = 1.0;
    md.precision.assign(kRecallPoints, 0.0);
    md.confidence.assign(kRecallPoints, 0.0);
    md.trans_err.assign(kRecallPoints, 1.0);
    md.vel_err.assign(kRecallPoints, 1.0);
    md.scale_err.assign(kRecallPoints, 1.0);
    md.orient_err.assign(kRecallPoints, 1.0);
    return md;
}

std::size_t MetricData::max_recall_index() const {
    for (std::size_t i = confidence.size(); i-- > 0;)
        if (confidence[i] != 0.0) return i;
    return 0;
}

std::vector<double> interp(const std::vector<double>& x, const std::vector<double>& xp,
                           const std::vector<double>& fp, double left, double right) {
    if (xp.empty() || xp.size() != fp.size()) throw DomainError("interp: xp and fp must be non-empty and equal length");
    std::vector<double> out(x.size());
    const std::size_t n = xp.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (std::isnan(v)) {
            out[i] = v;
            continue;
        }
        if (v < xp.front()) {
            out[i] = left;
            continue;
        }
        if (v > xp.back()) {
            out[i] = right;
            continue;
        }
        // Last j with xp[j] <= v.
        const std::size_t j = static_cast<std::size_t>(std::upper_bound(xp.begin(), xp.end(), v) - xp.begin()) - 1;
        if (j == n - 1 || xp[j] == v) {
            out[i] = fp[j];
            continue;
        }
        const double slope = (fp[j + 1] - fp[j]) / (xp[j + 1] - xp[j]);
        double r = slope * (v - xp[j]) + fp[j];
        if (std::isnan(r)) {
            r = slope * (v - xp[j + 1]) + fp[j + 1];
            if (std::isnan(r) && fp[j] == fp[j + 1]) r = fp[j];
        }
        out[i] = r;
    }
    return out;
}

std::vector<double> cummean(const std::vector<double>& x) {
    if (std::all_of(x.begin(), x.end(), [](double v) { return std::isnan(v); })) return std::vector<double>(x.size(), 1.0);
    std::vector<double> out(x.size(), 0.0);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isnan(x[i])) {
            sum += x[i];
            ++count;
        }
        out[i] = count ? sum / static_cast<double>(count) : 0.0;
    }
    return out;
}

double center_distance(const EvalBox& a, const EvalBox& b) {
    return std::hypot(a.translation.x() - b.translation.x(), a.translation.y() - b.translation.y());
}

double scale_iou(const EvalBox& a, const EvalBox& b) {
    const Vec3 m = a.size.cwiseMin(b.size);
    const double inter = m.prod();
    const double uni = a.size.prod() + b.size.prod() - inter;
    return inter / uni;
}

double yaw_diff(const EvalBox& gt, const EvalBox& det, double period) {
    const double x = gt.yaw - det.yaw + period / 2.0;
    double diff = x - std::floor(x / period) * period - period / 2.0;
    if (diff > kPi) diff -= kTwoPi;
    return std::abs(diff);
}

Accumulation accumulate(const std::vector<EvalBox>& gts, const std::vector<EvalBox>& dets,
                        const std::string& class_name, double threshold) {
    std::unordered_map<std::string, std::vector<std::size_t>> gts_by_sample;
    std::size_t npos = 0;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        if (gts[i].name != class_name) continue;
        gts_by_sample[gts[i].sample_token].push_back(i);
        ++npos;
    }
    Accumulation acc;
    if (npos == 0) {
        acc.data = MetricData::no_predictions();
        return acc;
    }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < dets.size(); ++i)
        if (dets[i].name == class_name) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score < dets[b].score; });
    std::reverse(order.begin(), order.end());

    std::vector<char> taken(gts.size(), 0);
    std::vector<double> tp, fp, conf;
    std::vector<double> trans, vel, scale, orient, match_conf;
    double ctp = 0.0, cfp = 0.0;
    for (const std::size_t d : order) {
        const EvalBox& det = dets[d];
        double min_dist = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        bool found = false;
        const auto it = gts_by_sample.find(det.sample_token);
        if (it != gts_by_sample.end()) {
            for (const std::size_t g : it->second) {
                if (taken[g]) continue;
                const double dist = center_distance(gts[g], det);
                if (dist < min_dist) {
                    min_dist = dist;
                    best = g;
                    found = true;
                }
            }
        }
        if (found && min_dist < threshold) {
            taken[best] = 1;
            ctp += 1.0;
            const EvalBox& gt = gts[best];
            acc.matches.push_back({d, best, min_dist});
            trans.push_back(min_dist);
            vel.push_back((gt.velocity - det.velocity).norm());
            scale.push_back(1.0 - scale_iou(gt, det));
            orient.push_back(yaw_diff(gt, det));
            match_conf.push_back(det.score);
        } else {
            cfp += 1.0;
        }
        tp.push_back(ctp);
        fp.push_back(cfp);
        conf.push_back(det.score);
    }
    if (trans.empty()) {
        acc.data = MetricData::no_predictions();
        return acc;
    }

    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> prec(tp.size()), rec(tp.size());
    for (std::size_t i = 0; i < tp.size(); ++i) {
        prec[i] = tp[i] / std::max(fp[i] + tp[i], eps);
        rec[i] = tp[i] / static_cast<double>(npos);
    }
    MetricData& md = acc.data;
    md = MetricData::no_predictions();
    md.precision = interp(md.recall, rec, prec, prec.front(), 0.0);
    md.confidence = interp(md.recall, rec, conf, conf.front(), 0.0);

    // Errors are resampled against confidence, which decreases along recall.
    std::vector<double> conf_rev(md.confidence.rbegin(), md.confidence.rend());
    std::vector<double> mconf_rev(match_conf.rbegin(), match_conf.rend());
    auto resample = [&](const std::vector<double>& errors) {
        const std::vector<double> cm = cummean(errors);
        std::vector<double> cm_rev(cm.rbegin(), cm.rend());
        std::vector<double> r = interp(conf_rev, mconf_rev, cm_rev, cm_rev.front(), cm_rev.back());
        std::reverse(r.begin(), r.end());
        return r;
    };
    md.trans_err = resample(trans);
    md.vel_err = resample(vel);
    md.scale_err = resample(scale);
    md.orient_err = resample(orient);
    return acc;
}

double calc_ap(const MetricData& md, double min_recall, double min_precision) {
    const std::size_t first = static_cast<std::size_t>(std::lround(100.0 * min_recall)) + 1;
    if (first >= md.precision.size()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = first; i < md.precision.size(); ++i) sum += std::max(md.precision[i] - min_precision, 0.0);
    return sum / static_cast<double>(md.precision.size() - first) / (1.0 - min_precision);
}

double calc_tp(const MetricData& md, const std::vector<double>& errors, double min_recall) {
    const std::size_t first = static_cast<std::size_t>(std::lround(100.0 * min_recall)) + 1;
    const std::size_t last = md.max_recall_index();
    if (last < first) return 1.0;
    double sum = 0.0;
    for (std::size_t i = first; i <= last; ++i) sum += errors[i];
    return sum / static_cast<double>(last - first + 1);
}

ApResult match_and_ap(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts,
                      const std::string& class_name, const std::vector<double>& thresholds) {
    ApResult r;
    r.thresholds = thresholds;
    for (const double t : thresholds) {
        Accumulation acc = accumulate(gts, dets, class_name, t);
        r.ap.push_back(calc_ap(acc.data));
        r.matches.push_back(std::move(acc.matches));
    }
    return r;
}

TpErrors tp_errors(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts,
                   const std::string& class_name, double threshold) {
    const MetricData md = accumulate(gts, dets, class_name, threshold).data;
    return {calc_tp(md, md.trans_err), calc_tp(md, md.scale_err), calc_tp(md, md.orient_err),
            calc_tp(md, md.vel_err)};
}

double nds(double map, double mate, double mase, double maoe, double mave) {
    double s = 5.0 * map;
    for (const double e : {mate, mase, maoe, mave}) s += 1.0 - std::min(1.0, e);
    return s / 9.0;
}

EvalConfig EvalConfig::defaults() {
    EvalConfig c;
    c.classes.assign(kEvalClasses.begin(), kEvalClasses.end());
    return c;
}

MetricsReport evaluate(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts, const EvalConfig& config) {
    MetricsReport rep;
    rep.thresholds = config.thresholds;
    std::vector<ClassMetrics> per_class(config.classes.size());
    parallel_for_chunks(config.classes.size(), config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const std::string& name = config.classes[c];
            ClassMetrics& m = per_class[c];
            m.n_gt = static_cast<std::size_t>(
                std::count_if(gts.begin(), gts.end(), [&](const EvalBox& b) { return b.name == name; }));
            m.n_det = static_cast<std::size_t>(
                std::count_if(dets.begin(), dets.end(), [&](const EvalBox& b) { return b.name == name; }));
            m.ap = match_and_ap(dets, gts, name, config.thresholds).ap;
            m.mean_ap = m.ap.empty() ? 0.0 : std::accumulate(m.ap.begin(), m.ap.end(), 0.0) / static_cast<double>(m.ap.size());
            m.tp = tp_errors(dets, gts, name, config.tp_threshold);
        }
    });

    double sum_ap = 0.0;
    double te = 0.0, se = 0.0, oe = 0.0, ve = 0.0;
    for (std::size_t c = 0; c < config.classes.size(); ++c) {
        const ClassMetrics& m = per_class[c];
        rep.n_gt += m.n_gt;
        rep.n_det += m.n_det;
        if (m.n_gt > 0) {
            ++rep.evaluated_classes;
            sum_ap += m.mean_ap;
            te += m.tp.ate;
            se += m.tp.ase;
            oe += m.tp.aoe;
            ve += m.tp.ave;
        }
        rep.classes.emplace(config.classes[c], m);
    }
    if (rep.evaluated_classes > 0) {
        const double n = static_cast<double>(rep.evaluated_classes);
        rep.map = sum_ap / n;
        rep.mate = te / n;
        rep.mase = se / n;
        rep.maoe = oe / n;
        rep.mave = ve / n;
    }
    rep.nds = nds(rep.map, rep.mate, rep.mase, rep.maoe, rep.mave);
    return rep;
}

namespace {

bool in_interval(StratumKind kind, const std::array<double, 2>& iv, double v) {
    if (kind == StratumKind::distance) return v >= iv[0] && v < iv[1];
    const double width = iv[1] - iv[0];
    double off = std::fmod(v - iv[0], 360.0);
    if (off < 0.0) off += 360.0;
    return off < width;
}

double stratum_value(StratumKind kind, const EvalBox& b) {
    const double x = b.ego_translation.x();
    const double y = b.ego_translation.y();
    if (kind == StratumKind::distance) return std::hypot(x, y);
    return rad_to_deg(std::atan2(y, x));
}

}  // namespace

void StrataSpec::validate() const {
    if (strata.empty()) throw ValidationError("strata: at least one stratum is required");
    struct Span {
        double lo, hi;
        std::string name;
    };
    std::vector<Span> spans;
    for (const auto& s : strata) {
        if (s.intervals.empty()) throw ValidationError("strata: '" + s.name + "' has no interval");
        for (const auto& iv : s.intervals) {
            if (!(iv[1] > iv[0])) throw ValidationError("strata: '" + s.name + "' has an empty interval");
            if (kind == StratumKind::distance) {
                if (iv[0] < 0.0) throw ValidationError("strata: '" + s.name + "' has a negative distance");
                spans.push_back({iv[0], iv[1], s.name});
            } else {
                if (iv[1] - iv[0] > 360.0) throw ValidationError("strata: '" + s.name + "' spans more than 360 deg");
                // Unroll onto [0, 720) so wrapped sectors compare as plain intervals.
                double lo = std::fmod(iv[0], 360.0);
                if (lo < 0.0) lo += 360.0;
                spans.push_back({lo, lo + (iv[1] - iv[0]), s.name});
            }
        }
    }
    for (std::size_t i = 0; i < spans.size(); ++i)
        for (std::size_t j = i + 1; j < spans.size(); ++j) {
            auto overlap = [](double a0, double a1, double b0, double b1) { return a0 < b1 && b0 < a1; };
            bool hit = overlap(spans[i].lo, spans[i].hi, spans[j].lo, spans[j].hi);
            if (kind == StratumKind::angular)
                hit = hit || overlap(spans[i].lo + 360.0, spans[i].hi + 360.0, spans[j].lo, spans[j].hi) ||
                      overlap(spans[i].lo, spans[i].hi, spans[j].lo + 360.0, spans[j].hi + 360.0);
            if (hit)
                throw ValidationError("strata: '" + spans[i].name + "' overlaps '" + spans[j].name + "'");
        }
}

int StrataSpec::assign(const EvalBox& box) const {
    const double v = stratum_value(kind, box);
    for (std::size_t i = 0; i < strata.size(); ++i)
        for (const auto& iv : strata[i].intervals)
            if (in_interval(kind, iv, v)) return static_cast<int>(i);
    return -1;
}

StrataSpec StrataSpec::distance_bins() {
    StrataSpec s;
    s.kind = StratumKind::distance;
    for (int lo = 0; lo < 50; lo += 10)
        s.strata.push_back({std::to_string(lo) + "-" + std::to_string(lo + 10), {{double(lo), double(lo + 10)}}});
    return s;
}

StrataSpec StrataSpec::angular_sectors() {
    StrataSpec s;
    s.kind = StratumKind::angular;
    s.strata = {
        {"front", {{-60.0, 60.0}}},
        {"back", {{120.0, 240.0}}},
        {"sides", {{60.0, 120.0}, {240.0, 300.0}}},
    };
    return s;
}

StratifiedReport stratified_map(const std::vector<EvalBox>& dets, const std::vector<EvalBox>& gts,
                                const StrataSpec& strata, const EvalConfig& config) {
    strata.validate();
    StratifiedReport out;
    out.kind = strata.kind;
    std::vector<std::vector<EvalBox>> sgts(strata.strata.size()), sdets(strata.strata.size());
    for (const auto& g : gts) {
        const int k = strata.assign(g);
        if (k < 0) ++out.unassigned_gt;
        else sgts[static_cast<std::size_t>(k)].push_back(g);
    }
    for (const auto& d : dets) {
        const int k = strata.assign(d);
        if (k < 0) ++out.unassigned_det;
        else sdets[static_cast<std::size_t>(k)].push_back(d);
    }
    for (std::size_t i = 0; i < strata.strata.size(); ++i)
        out.strata.push_back({strata.strata[i].name, evaluate(sdets[i], sgts[i], config)});
    return out;
}

namespace {

Vec3 vec3_of(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

Quaternion quat_of(const std::array<double, 4>& a) { return Quaternion(a[0], a[1], a[2], a[3]); }

/// Ego pose per sample token, from the first of its sample_data rows.
std::unordered_map<std::string, Pose> sample_ego_poses(const RecordSet& rs) {
    std::unordered_map<std::string, const EgoPoseRow*> poses;
    for (const auto& p : rs.ego_pose) poses.emplace(p.token, &p);
    std::unordered_map<std::string, Pose> out;
    for (const auto& sd : rs.sample_data) {
        if (out.count(sd.sample_token)) continue;
        const auto it = poses.find(sd.ego_pose_token);
        if (it == poses.end()) throw IntegrityError(sd.ego_pose_token, "ego_pose does not resolve");
        out.emplace(sd.sample_token, Pose(quat_of(it->second->rotation), vec3_of(it->second->translation)));
    }
    return out;
}

}  // namespace

std::vector<EvalBox> load_ground_truth(const RecordSet& rs, const std::vector<std::string>& classes) {
    std::unordered_map<std::string, const SampleRow*> samples;
    for (const auto& s : rs.sample) samples.emplace(s.token, &s);
    std::unordered_map<std::string, const SampleAnnotationRow*> anns;
    for (const auto& a : rs.sample_annotation) anns.emplace(a.token, &a);
    std::unordered_map<std::string, std::string> category_name;
    for (const auto& c : rs.category) category_name.emplace(c.token, c.name);
    std::unordered_map<std::string, std::string> instance_class;
    for (const auto& i : rs.instance) instance_class.emplace(i.token, category_name.at(i.category_token));
    const auto ego = sample_ego_poses(rs);

    std::vector<EvalBox> out;
    for (const auto& a : rs.sample_annotation) {
        const std::string& name = instance_class.at(a.instance_token);
        if (std::find(classes.begin(), classes.end(), name) == classes.end()) continue;
        const auto pose = ego.find(a.sample_token);
        if (pose == ego.end()) throw IntegrityError(a.sample_token, "sample has no sample_data for its ego pose");
        EvalBox b;
        b.sample_token = a.sample_token;
        b.name = name;
        b.translation = vec3_of(a.translation);
        b.ego_translation = pose->second.inverse().apply(b.translation);
        b.size = vec3_of(a.size);
        b.yaw = quat_of(a.rotation).yaw();

        const SampleAnnotationRow* first = a.prev.empty() ? &a : anns.at(a.prev);
        const SampleAnnotationRow* last = a.next.empty() ? &a : anns.at(a.next);
        if (first != last) {
            const double dt = static_cast<double>(samples.at(last->sample_token)->timestamp -
                                                  samples.at(first->sample_token)->timestamp) * 1e-6;
            const Vec3 dp = vec3_of(last->translation) - vec3_of(first->translation);
            if (dt > 0.0) b.velocity = Vec2(dp.x(), dp.y()) / dt;
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<EvalBox> parse_detections(const std::string& text, const RecordSet& rs,
                                      const std::vector<std::string>& classes, const std::string& source_name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(source_name + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("results") || !j["results"].is_object())
        throw ValidationError(source_name + ": expected an object with a \"results\" object");

    const auto ego = sample_ego_poses(rs);
    std::vector<std::string> unknown;
    std::vector<EvalBox> out;
    try {
        for (const auto& [token, list] : j["results"].items()) {
            if (!ego.count(token)) {
                unknown.push_back(token);
                continue;
            }
            if (!list.is_array()) throw ValidationError(source_name + ": results['" + token + "'] is not an array");
            for (const auto& d : list) {
                EvalBox b;
                b.sample_token = d.at("sample_token").get<std::string>();
                if (b.sample_token != token)
                    throw ValidationError(source_name + ": detection filed under " + token + " names sample " +
                                          b.sample_token);
                b.name = d.at("detection_name").get<std::string>();
                if (std::find(classes.begin(), classes.end(), b.name) == classes.end())
                    throw ValidationError(source_name + ": unknown detection_name '" + b.name + "'");
                b.score = d.at("detection_score").get<double>();
                if (!(b.score >= 0.0 && b.score <= 1.0))
                    throw ValidationError(source_name + ": detection_score outside [0, 1]");
                b.translation = vec3_of(d.at("translation").get<std::array<double, 3>>());
                b.size = vec3_of(d.at("size").get<std::array<double, 3>>());
                if (!(b.size.minCoeff() > 0.0)) throw ValidationError(source_name + ": size must be positive");
                b.yaw = quat_of(d.at("rotation").get<std::array<double, 4>>()).yaw();
                if (d.contains("velocity") && !d["velocity"].is_null()) {
                    const auto v = d["velocity"].get<std::array<double, 2>>();
                    if (std::isfinite(v[0]) && std::isfinite(v[1])) b.velocity = Vec2(v[0], v[1]);
                }
                b.ego_translation = ego.at(token).inverse().apply(b.translation);
                out.push_back(std::move(b));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(source_name + ": " + e.what());
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& t : unknown) list += (list.empty() ? "" : ",") + t;
        throw IntegrityError(list, source_name + ": " + std::to_string(unknown.size()) +
                                       " detection sample token(s) not in the record set");
    }
    return out;
}

namespace {

nlohmann::json metrics_json(const MetricsReport& r) {
    nlohmann::json j;
    j["thresholds"] = r.thresholds;
    j["mAP"] = r.map;
    j["mATE"] = r.mate;
    j["mASE"] = r.mase;
    j["mAOE"] = r.maoe;
    j["mAVE"] = r.mave;
    j["NDS"] = r.nds;
    j["n_gt"] = r.n_gt;
    j["n_det"] = r.n_det;
    j["evaluated_classes"] = r.evaluated_classes;
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [name, m] : r.classes) {
        classes[name] = {{"ap", m.ap}, {"mean_ap", m.mean_ap}, {"ate", m.tp.ate}, {"ase", m.tp.ase},
                         {"aoe", m.tp.aoe}, {"ave", m.tp.ave}, {"n_gt", m.n_gt}, {"n_det", m.n_det}};
    }
    j["classes"] = classes;
    return j;
}

}  // namespace

std::string report_to_json(const MetricsReport& report, const StratifiedReport* strata) {
    nlohmann::json j = metrics_json(report);
    if (strata) {
        nlohmann::json s;
        s["kind"] = strata->kind == StratumKind::distance ? "distance" : "angular";
        s["unassigned_gt"] = strata->unassigned_gt;
        s["unassigned_det"] = strata->unassigned_det;
        nlohmann::json list = nlohmann::json::array();
        for (const auto& st : strata->strata) list.push_back({{"name", st.name}, {"metrics", metrics_json(st.report)}});
        s["strata"] = list;
        j["strata"] = s;
    }
    return j.dump(2) + "\n";
}

std::string stratified_csv(const StratifiedReport& report, const std::vector<std::string>& classes) {
    std::ostringstream out;
    out << "stratum,n_gt,n_det,mAP,NDS";
    for (const auto& c : classes) out << ",AP_" << c;
    out << "\n";
    for (const auto& st : report.strata) {
        out << st.name << "," << st.report.n_gt << "," << st.report.n_det << "," << format_double(st.report.map) << ","
            << format_double(st.report.nds);
        for (const auto& c : classes) {
            const auto it = st.report.classes.find(c);
            out << ",";
            if (it != st.report.classes.end() && it->second.n_gt > 0) out << format_double(it->second.mean_ap);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace fbev
