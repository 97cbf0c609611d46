#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>

namespace kgalign {

namespace detail {

// SplitMix64 finalizer (Steele et al. mixing constants).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Counter-based splittable 64-bit generator.
///
/// Output i of a stream with key k is mix64(k + (i+1) * golden), i.e. the
/// SplitMix64 sequence started at k. Child streams are derived from the
/// parent key and a label, so any point in a program's draw schedule can be
/// named and reproduced independently of how many values other streams
/// consumed. All pipeline randomness (splits, shuffles, init, dropout masks,
/// random baseline tables) flows through this type; the draw order per
/// consumer is documented at the consumer.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t key) : key_(key) {}

    /// Independent child stream identified by a string label.
    SplitRng split(std::string_view label) const {
        return SplitRng(detail::mix64(key_ ^ detail::fnv1a64(label)));
    }

    /// Independent child stream identified by an index.
    SplitRng split(std::uint64_t index) const {
        return SplitRng(detail::mix64(key_ ^ ((index + 1) * kGolden)));
    }

    std::uint64_t next_u64() {
        ++counter_;
        return detail::mix64(key_ + counter_ * kGolden);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Standard normal via Box-Muller.
    double next_gaussian() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Uniform integer in [0, n), unbiased via rejection. n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// In-place Fisher-Yates shuffle driven by `rng`.
template <typename Container>
void shuffle(Container& v, SplitRng& rng) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        using std::swap;
        swap(v[i], v[j]);
    }
}

}  // namespace kgalign
