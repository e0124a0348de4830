#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gridshield {

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derives an independent sub-stream seed from a base seed, a purpose tag and
/// an optional index. Every consumer of randomness in the pipeline owns a
/// stream derived this way, so adding a draw in one place never shifts the
/// sequence seen by another.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(base ^ fnv1a64(tag)) + index);
}

/// Deterministic random stream.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std::*_distribution adaptors are not, so all variate transforms are
/// implemented here. Identical seeds produce identical sequences on every
/// platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~0ull - ~0ull % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller. Two uniforms per variate; the sine
    /// branch is discarded so consumption per call is constant.
    double gaussian() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Poisson by counting unit-rate exponential arrivals. O(mean) draws but
    /// exact for any mean, with no underflow for large means.
    long poisson(double mean) {
        if (mean <= 0.0) return 0;
        double t = 0.0;
        long k = 0;
        for (;;) {
            t += exponential(1.0);
            if (t >= mean) break;
            ++k;
        }
        return k;
    }

    /// k distinct integers from [0, n), partial Fisher-Yates order.
    std::vector<int> distinct(int k, int n) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out;
        out.reserve(k);
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(below(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace gridshield
