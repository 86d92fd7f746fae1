#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace poissonlab {

// Provenance record attached to every sampled configuration.
struct SeedTag {
    std::uint64_t master = 0;
    std::uint64_t trial = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic per-trial random stream. Every trial derives its own stream
// from (master seed, trial index), so aggregation order never affects draws
// and runs are bit-reproducible for a fixed master seed.
class Stream {
public:
    Stream(std::uint64_t master, std::uint64_t trial)
        : tag_{master, trial},
          eng_(splitmix64(splitmix64(master) ^ (trial + 0x71D67FFFEDA60000ULL))) {}

    const SeedTag& tag() const { return tag_; }

    // Uniform on [0,1) with 53-bit resolution, engine-portable.
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return u01() < p; }

    // Poisson count: sequential inversion below mean 30, transformed
    // rejection with squeeze (Hormann PTRS) above.
    std::uint64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw std::invalid_argument("poisson: negative mean");
        if (mean == 0.0) return 0;
        return mean < 30.0 ? poisson_inversion(mean) : poisson_ptrs(mean);
    }

    // Positions of successes in [0,len) for iid Bernoulli(p) slots, visited
    // by geometric gap jumps; O(successes) instead of O(len).
    std::vector<std::uint32_t> bernoulli_hits(std::uint32_t len, double p) {
        std::vector<std::uint32_t> hits;
        if (p <= 0.0 || len == 0) return hits;
        if (p >= 1.0) {
            hits.resize(len);
            for (std::uint32_t i = 0; i < len; ++i) hits[i] = i;
            return hits;
        }
        const double log_q = std::log1p(-p);
        double pos = 0.0;
        while (true) {
            const double u = 1.0 - u01();  // in (0,1]
            pos += std::floor(std::log(u) / log_q);
            if (pos >= static_cast<double>(len)) break;
            hits.push_back(static_cast<std::uint32_t>(pos));
            pos += 1.0;
            if (pos >= static_cast<double>(len)) break;
        }
        return hits;
    }

private:
    std::uint64_t poisson_inversion(double mean) {
        const double u = u01();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
            if (k > 2000) break;  // cdf saturated at double precision
        }
        return k;
    }

    std::uint64_t poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        while (true) {
            const double u = u01() - 0.5;
            double v = u01();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
                kf * loglam - mean - std::lgamma(kf + 1.0)) {
                return static_cast<std::uint64_t>(kf);
            }
        }
    }

    SeedTag tag_;
    std::mt19937_64 eng_;
};

}  // namespace poissonlab
