#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <tuple>

namespace oracle {

double fsum(const std::vector<double>& xs) {
    std::vector<double> partials;
    for (double x : xs) {
        std::size_t i = 0;
        for (double y : partials) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[i++] = lo;
            x = hi;
        }
        partials.resize(i);
        partials.push_back(x);
    }
    std::size_t n = partials.size();
    double hi = 0.0;
    if (n == 0) return hi;
    hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

std::vector<std::size_t> detection_order(const std::vector<Box2>& dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        return a > b;
    });
    return order;
}

namespace {

double dist(const Box2& a, const Box2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

using Key = std::tuple<int, double, int>;

}  // namespace

std::vector<int> exhaustive_assignment(const std::vector<Box2>& gts, const std::vector<Box2>& dets,
                                       double threshold) {
    const auto order = detection_order(dets);
    std::vector<int> current(dets.size(), -1);
    std::vector<int> best;
    std::vector<Key> best_keys;
    bool have_best = false;
    std::vector<Key> keys;
    std::vector<bool> used(gts.size(), false);

    std::function<void(std::size_t)> search = [&](std::size_t k) {
        if (k == order.size()) {
            if (!have_best || keys < best_keys) {
                have_best = true;
                best = current;
                best_keys = keys;
            }
            return;
        }
        const std::size_t d = order[k];
        keys.emplace_back(1, 0.0, 0);
        current[d] = -1;
        search(k + 1);
        keys.pop_back();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].sample != dets[d].sample) continue;
            const double dd = dist(gts[g], dets[d]);
            if (!(dd < threshold)) continue;
            used[g] = true;
            current[d] = static_cast<int>(g);
            keys.emplace_back(0, dd, static_cast<int>(g));
            search(k + 1);
            keys.pop_back();
            current[d] = -1;
            used[g] = false;
        }
    };
    search(0);
    return best;
}

double average_precision(const std::vector<bool>& tp_in_order, std::size_t n_gt) {
    if (n_gt == 0 || tp_in_order.empty()) return 0.0;
    std::vector<double> rec, prec;
    double tp = 0.0;
    for (std::size_t i = 0; i < tp_in_order.size(); ++i) {
        if (tp_in_order[i]) tp += 1.0;
        prec.push_back(tp / static_cast<double>(i + 1));
        rec.push_back(tp / static_cast<double>(n_gt));
    }
    double total = 0.0;
    for (int k = 11; k <= 100; ++k) {
        const double r = k == 100 ? 1.0 : k * 0.01;
        double p = 0.0;
        if (r < rec.front()) {
            p = prec.front();
        } else if (r > rec.back()) {
            p = 0.0;
        } else {
            std::size_t j = 0;
            for (std::size_t i = 0; i < rec.size(); ++i)
                if (rec[i] <= r) j = i;
            if (j + 1 == rec.size() || rec[j] == r) {
                p = prec[j];
            } else {
                const double t = (r - rec[j]) / (rec[j + 1] - rec[j]);
                p = prec[j] + t * (prec[j + 1] - prec[j]);
            }
        }
        total += std::max(p - 0.1, 0.0);
    }
    return total / 90.0 / 0.9;
}

std::vector<double> polar_splat(const std::vector<SplatPoint>& points, int channels, double rho_max,
                                int n_theta, int n_rho, double z_min, double z_max) {
    const double two_pi = 2.0 * std::acos(-1.0);
    const std::size_t bins = static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_rho);
    std::vector<std::vector<std::vector<double>>> terms(
        static_cast<std::size_t>(channels), std::vector<std::vector<double>>(bins));
    for (const auto& p : points) {
        if (p.z < z_min || p.z >= z_max) continue;
        const double rho = std::sqrt(p.x * p.x + p.y * p.y);
        if (rho >= rho_max) continue;
        double theta = std::atan2(p.y, p.x);
        if (theta < 0.0) theta += two_pi;
        int t = static_cast<int>(theta / two_pi * n_theta);
        int r = static_cast<int>(rho / rho_max * n_rho);
        t = std::min(t, n_theta - 1);
        r = std::min(r, n_rho - 1);
        const std::size_t bin = static_cast<std::size_t>(t) * static_cast<std::size_t>(n_rho) +
                                static_cast<std::size_t>(r);
        for (int c = 0; c < channels; ++c)
            terms[static_cast<std::size_t>(c)][bin].push_back(p.feature[static_cast<std::size_t>(c)]);
    }
    std::vector<double> out;
    for (const auto& channel : terms)
        for (const auto& bin : channel) out.push_back(fsum(bin));
    return out;
}

const std::vector<TableRow>& published_results() {
    static const std::vector<TableRow> rows = {
        {"BEVDet", "zero-shot", 0.008, 0.030, 1.036, 0.830, 1.139, 0.957},
        {"BEVDet", "baseline", 0.121, 0.159, 0.736, 0.481, 1.031, 1.017},
        {"BEVDet", "DA-VTM", 0.150, 0.212, 0.686, 0.400, 1.089, 0.816},
        {"BEVDet", "DA-VTM+polar", 0.153, 0.219, 0.655, 0.384, 0.979, 0.846},
        {"BEVDet", "rectification", 0.169, 0.232, 0.673, 0.388, 1.004, 0.760},
        {"BEVFormer", "zero-shot", 0.034, 0.083, 0.998, 0.469, 1.031, 1.770},
        {"BEVFormer", "baseline", 0.167, 0.216, 0.716, 0.378, 0.847, 1.216},
        {"BEVFormer", "DA-VTM", 0.167, 0.230, 0.731, 0.361, 0.736, 1.027},
        {"BEVFormer", "DA-VTM+polar", 0.175, 0.221, 0.715, 0.357, 0.858, 1.032},
        {"BEVFormer", "rectification", 0.218, 0.275, 0.660, 0.357, 0.792, 0.862},
        {"PETR", "zero-shot", 0.001, 0.039, 1.119, 0.698, 1.157, 1.125},
        {"PETR", "baseline", 0.266, 0.280, 0.668, 0.340, 0.885, 0.932},
        {"PETR", "DA-VTM", 0.269, 0.283, 0.596, 0.334, 0.884, 1.057},
        {"PETR", "DA-VTM+polar", 0.280, 0.288, 0.598, 0.347, 0.875, 0.993},
        {"PETR", "rectification", 0.295, 0.337, 0.629, 0.337, 0.839, 0.677},
    };
    return rows;
}

}  // namespace oracle
