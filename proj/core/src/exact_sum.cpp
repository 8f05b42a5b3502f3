#include "fbev/exact_sum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace fbev {

void ExactAccumulator::add(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    const bool negative = (bits >> 63) != 0;
    const auto biased_exp = static_cast<int>((bits >> 52) & 0x7ffu);
    std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);
    if (biased_exp == 0x7ff) {
        if (mantissa != 0) has_nan_ = true;
        else if (negative) has_neg_inf_ = true;
        else has_pos_inf_ = true;
        return;
    }
    if (biased_exp == 0 && mantissa == 0) return;

    int exponent;  // x = mantissa * 2^exponent
    if (biased_exp == 0) {
        exponent = -1074;
    } else {
        mantissa |= std::uint64_t{1} << 52;
        exponent = biased_exp - 1075;
    }
    const int pos = exponent + kBias;  // >= 14
    const int digit = pos / 32;
    const int shift = pos % 32;
    // mantissa << shift spans at most 84 bits: split into three 32-bit digits.
    const std::uint64_t lo = mantissa << shift;
    const std::uint64_t hi = shift == 0 ? 0 : mantissa >> (64 - shift);
    const auto d0 = static_cast<std::int64_t>(lo & 0xffffffffu);
    const auto d1 = static_cast<std::int64_t>(lo >> 32);
    const auto d2 = static_cast<std::int64_t>(hi);
    if (negative) {
        digits_[digit] -= d0;
        digits_[digit + 1] -= d1;
        digits_[digit + 2] -= d2;
    } else {
        digits_[digit] += d0;
        digits_[digit + 1] += d1;
        digits_[digit + 2] += d2;
    }
    if (++pending_ >= kNormalizeEvery) normalize();
}

void ExactAccumulator::merge(const ExactAccumulator& other) {
    ExactAccumulator o = other;
    o.normalize();
    normalize();
    for (int i = 0; i < kDigits; ++i) digits_[i] += o.digits_[i];
    normalize();
    has_nan_ = has_nan_ || o.has_nan_;
    has_pos_inf_ = has_pos_inf_ || o.has_pos_inf_;
    has_neg_inf_ = has_neg_inf_ || o.has_neg_inf_;
}

void ExactAccumulator::reset() { *this = ExactAccumulator{}; }

void ExactAccumulator::normalize() {
    // Carry so that digits 0..n-2 lie in [0, 2^32); the top digit keeps the sign.
    for (int i = 0; i + 1 < kDigits; ++i) {
        const std::int64_t carry = digits_[i] >> 32;  // arithmetic shift = floor division
        digits_[i] -= carry * (std::int64_t{1} << 32);
        digits_[i + 1] += carry;
    }
    pending_ = 0;
}

double ExactAccumulator::value() const {
    if (has_nan_ || (has_pos_inf_ && has_neg_inf_)) return std::numeric_limits<double>::quiet_NaN();
    if (has_pos_inf_) return std::numeric_limits<double>::infinity();
    if (has_neg_inf_) return -std::numeric_limits<double>::infinity();

    ExactAccumulator acc = *this;
    acc.normalize();
    bool negative = acc.digits_[kDigits - 1] < 0;
    if (negative) {
        for (auto& d : acc.digits_) d = -d;
        acc.normalize();
    }
    auto& d = acc.digits_;
    int top = kDigits - 1;
    while (top >= 0 && d[top] == 0) --top;
    if (top < 0) return 0.0;

    auto bit_at = [&](int k) -> std::uint64_t {
        return (static_cast<std::uint64_t>(d[k / 32]) >> (k % 32)) & 1u;
    };
    const int top_bit = 32 * top + (std::bit_width(static_cast<std::uint64_t>(d[top])) - 1);
    // Lowest kept bit: 53 significant bits, but never below the subnormal quantum 2^-1074.
    const int low_bit = std::max(top_bit - 52, kBias - 1074);
    std::uint64_t m = 0;
    for (int k = top_bit; k >= low_bit; --k) m = (m << 1) | bit_at(k);
    bool round_bit = false;
    bool sticky = false;
    if (low_bit > 0) {
        round_bit = bit_at(low_bit - 1) != 0;
        const int below = low_bit - 1;  // bits [0, below)
        const int full = below / 32;
        for (int i = 0; i < full && !sticky; ++i) sticky = d[i] != 0;
        if (!sticky && below % 32 != 0) {
            const std::uint64_t mask = (std::uint64_t{1} << (below % 32)) - 1;
            sticky = (static_cast<std::uint64_t>(d[full]) & mask) != 0;
        }
    }
    if (round_bit && (sticky || (m & 1u))) ++m;
    const double magnitude = std::ldexp(static_cast<double>(m), low_bit - kBias);
    return negative ? -magnitude : magnitude;
}

}  // namespace fbev
