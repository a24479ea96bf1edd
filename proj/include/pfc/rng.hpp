#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pfc {

/// Deterministic random stream. Sampling is done by inversion and
/// Box-Muller on top of mt19937_64 so that identical seeds produce
/// bit-identical draws independently of the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = uniform_pos();
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        double c = std::cos(2.0 * M_PI * v);
        double s = std::sin(2.0 * M_PI * v);
        spare_ = r * s;
        has_spare_ = true;
        return r * c;
    }

    /// Exact Poisson sampling; large means are split recursively
    /// (sums of independent Poissons are Poisson).
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 30.0) return poisson(mean * 0.5) + poisson(mean * 0.5);
        double limit = std::exp(-mean);
        std::uint64_t count = 0;
        double prod = uniform_pos();
        while (prod > limit) {
            ++count;
            prod *= uniform_pos();
        }
        return count;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent per-item seed from a base seed (splitmix64 mix).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace pfc
