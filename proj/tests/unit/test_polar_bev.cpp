#include "fbev/errors.hpp"
#include "fbev/exact_sum.hpp"
#include "fbev/polar_bev.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace fbev;

namespace {

BevGrid grid() { return BevGrid::polar(51.2, 64, 32, -5.0, 3.0); }

double linf(const PolarEncoding& a, const PolarEncoding& b) {
    double m = 0.0;
    for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

}  // namespace

TEST(Grid, Validation) {
    EXPECT_THROW(BevGrid::polar(0.0, 8, 4, 0, 1), ValidationError);
    EXPECT_THROW(BevGrid::polar(10.0, 3, 4, 0, 1), ValidationError);
    EXPECT_THROW(BevGrid::polar(10.0, 8, 0, 0, 1), ValidationError);
    EXPECT_THROW(BevGrid::polar(10.0, 8, 4, 1, 0), ValidationError);
    EXPECT_THROW(BevGrid::cartesian(0, 0, 4, 0, 1, 4, 0, 1), ValidationError);
    EXPECT_EQ(grid().bin_count(), 64u * 32u);
    const auto c = BevGrid::cartesian(-10, 10, 5, -4, 4, 2, 0, 1);
    EXPECT_EQ(c.dims()[0], 2u);
    EXPECT_EQ(c.dims()[1], 5u);
}

TEST(Bins, MatchDefinition) {
    const BevGrid g = grid();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(0.0, kTwoPi), rho(0.0, 51.2);
    for (int i = 0; i < 10000; ++i) {
        const CylindricalPoint p{rho(rng), th(rng), 0.0};
        const auto b = bin_index(p, g);
        ASSERT_TRUE(b);
        const double dth = kTwoPi / 64.0, dr = 51.2 / 32.0;
        EXPECT_LE(b->theta_idx * dth, p.theta + 1e-12);
        EXPECT_GT((b->theta_idx + 1) * dth, p.theta - 1e-12);
        EXPECT_LE(b->rho_idx * dr, p.rho + 1e-12);
        EXPECT_GT((b->rho_idx + 1) * dr, p.rho - 1e-12);
    }
}

TEST(Bins, EdgesAndWrap) {
    const BevGrid g = grid();
    EXPECT_FALSE(bin_index({51.2, 0.0, 0.0}, g));
    EXPECT_TRUE(bin_index({std::nextafter(51.2, 0.0), 0.0, 0.0}, g));
    EXPECT_EQ(bin_index({1.0, std::nextafter(kTwoPi, 0.0), 0.0}, g)->theta_idx, 63);
    EXPECT_EQ(bin_index({1.0, kTwoPi, 0.0}, g)->theta_idx, 0);
    EXPECT_EQ(bin_index({1.0, -1e-9, 0.0}, g)->theta_idx, 63);
    EXPECT_EQ(bin_index({0.0, 0.0, 0.0}, g)->rho_idx, 0);
}

TEST(Bins, CenterIsInsideItsBin) {
    const BevGrid g = grid();
    for (int t = 0; t < g.n_theta; ++t) {
        for (int r = 0; r < g.n_rho; ++r) {
            const auto c = bin_center({t, r}, g);
            const auto b = bin_index(c, g);
            ASSERT_TRUE(b);
            EXPECT_EQ(b->theta_idx, t);
            EXPECT_EQ(b->rho_idx, r);
            EXPECT_DOUBLE_EQ(c.z, -1.0);
        }
    }
}

TEST(Bins, FlatBinRespectsSlabAndLayout) {
    const BevGrid g = BevGrid::polar(10.0, 8, 4, 0.0, 2.0);
    EXPECT_FALSE(flat_bin(Vec3(1, 1, 2.0), g));
    EXPECT_FALSE(flat_bin(Vec3(1, 1, -0.1), g));
    // theta in [pi/4, pi/2), rho in [7.5, 10)
    EXPECT_EQ(*flat_bin(cyl_to_cart({8.0, 1.0, 1.0}), g), 1u * 4u + 3u);
    const BevGrid c = BevGrid::cartesian(-10, 10, 4, -10, 10, 2, 0, 2);
    EXPECT_EQ(*flat_bin(Vec3(6.0, 3.0, 1.0), c), 1u * 4u + 3u);
    EXPECT_FALSE(flat_bin(Vec3(10.0, 0.0, 1.0), c));
}

TEST(Encoding, Components) {
    const BevGrid g = grid();
    const auto e = encode_polar(Vec3(3.0, 4.0, 1.0), g);
    EXPECT_DOUBLE_EQ(e.sin_theta(), 0.8);
    EXPECT_DOUBLE_EQ(e.cos_theta(), 0.6);
    EXPECT_DOUBLE_EQ(e.rho_norm(), 5.0 / 51.2);
    EXPECT_DOUBLE_EQ(e.z_norm(), 0.75);
    EXPECT_FALSE(e.clamped);
    const auto far = encode_polar(Vec3(100.0, 0.0, 10.0), g);
    EXPECT_TRUE(far.clamped);
    EXPECT_EQ(far.rho_norm(), 1.0);
    EXPECT_EQ(far.z_norm(), 1.0);
    const auto origin = encode_polar(Vec3::Zero(), g);
    EXPECT_EQ(origin.sin_theta(), 0.0);
    EXPECT_EQ(origin.cos_theta(), 1.0);
}

TEST(Encoding, ContinuousAcrossWrap) {
    const BevGrid g = grid();
    for (double rho : {0.5, 10.0, 50.0}) {
        const auto a = encode_polar(cyl_to_cart({rho, 1e-6, 0.5}), g);
        const auto b = encode_polar(cyl_to_cart({rho, kTwoPi - 1e-6, 0.5}), g);
        EXPECT_LT(linf(a, b), 1e-5);
    }
}

TEST(Encoding, Errors) {
    EXPECT_THROW(encode_polar(Vec3::Zero(), BevGrid::cartesian(-1, 1, 2, -1, 1, 2, 0, 1)), DomainError);
    EXPECT_THROW(encode_polar(Vec3::Zero(), BevGrid::polar(10, 8, 4, 1, 1)), DomainError);
}

TEST(Anchors, Layout) {
    const BevGrid g = BevGrid::polar(40.0, 8, 4, -2.0, 2.0);
    const auto a = polar_anchor_grid(g, 5);
    ASSERT_EQ(a.size(), 40u);
    EXPECT_DOUBLE_EQ(a[0].theta, kTwoPi / 16.0);
    EXPECT_DOUBLE_EQ(a[0].rho, 4.0);
    EXPECT_DOUBLE_EQ(a[4].rho, 36.0);
    EXPECT_DOUBLE_EQ(a[5].theta, 3.0 * kTwoPi / 16.0);
    for (const auto& p : a) EXPECT_EQ(p.z, 0.0);
    EXPECT_THROW(polar_anchor_grid(g, 0), DomainError);
}

TEST(ExactSum, MatchesCorrectlyRoundedSum) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-60, 60);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs;
        for (int i = 0; i < 300; ++i) xs.push_back(std::ldexp(mant(rng), expo(rng)));
        ExactAccumulator acc;
        for (double x : xs) acc.add(x);
        EXPECT_EQ(acc.value(), oracle::fsum(xs));
        std::shuffle(xs.begin(), xs.end(), rng);
        ExactAccumulator a, b;
        for (std::size_t i = 0; i < xs.size(); ++i) (i % 3 ? a : b).add(xs[i]);
        a.merge(b);
        EXPECT_EQ(a.value(), acc.value());
    }
}

TEST(ExactSum, Cancellation) {
    ExactAccumulator acc;
    acc.add(1e300);
    acc.add(1.0);
    acc.add(-1e300);
    EXPECT_EQ(acc.value(), 1.0);
    acc.reset();
    EXPECT_EQ(acc.value(), 0.0);
    acc.add(std::numeric_limits<double>::denorm_min());
    EXPECT_EQ(acc.value(), std::numeric_limits<double>::denorm_min());
}

TEST(ExactSum, NonFinite) {
    ExactAccumulator acc;
    acc.add(std::numeric_limits<double>::infinity());
    EXPECT_TRUE(std::isinf(acc.value()));
    acc.add(-std::numeric_limits<double>::infinity());
    EXPECT_TRUE(std::isnan(acc.value()));
}
