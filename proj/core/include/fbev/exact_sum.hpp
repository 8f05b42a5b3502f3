#pragma once

#include <array>
#include <cstdint>

namespace fbev {

/// Order-independent summation of doubles.
///
/// Every addend is accumulated exactly into a fixed-point superaccumulator
/// spanning the whole double range (base-2^32 digits held in int64 words), and
/// the total is rounded once, to nearest-even, when read. The result is the
/// correctly rounded exact sum, so it is bitwise identical for any ordering
/// or partitioning of the same multiset of addends.
class ExactAccumulator {
public:
    void add(double x);
    void merge(const ExactAccumulator& other);
    void reset();
    double value() const;

private:
    static constexpr int kDigits = 70;
    // digit i holds bits [32 i, 32 i + 32) above 2^-kBias
    static constexpr int kBias = 1088;
    static constexpr std::uint32_t kNormalizeEvery = 1u << 30;

    void normalize();

    std::array<std::int64_t, kDigits> digits_{};
    std::uint32_t pending_ = 0;
    bool has_nan_ = false;
    bool has_pos_inf_ = false;
    bool has_neg_inf_ = false;
};

}  // namespace fbev
