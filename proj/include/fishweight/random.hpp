#ifndef FISHWEIGHT_RANDOM_HPP
#define FISHWEIGHT_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fishweight {

/**
 * Seeded generator with portable draws.
 *
 * The standard distributions are implementation-defined, so uniform and normal
 * variates are derived here directly from the 64-bit Mersenne twister output.
 * Given the same seed words, every platform produces the same stream.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}

    /// Stream keyed by (seed, stream), e.g. (config seed, draw index).
    Rng(std::uint64_t seed, std::uint64_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        m_engine.seed(seq);
    }

    std::uint64_t next() { return m_engine(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = m_engine();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one variate per call, no cached state).
    double normal()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 m_engine;
};

} // namespace fishweight

#endif // FISHWEIGHT_RANDOM_HPP
