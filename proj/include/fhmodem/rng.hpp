#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fhmodem/types.hpp"

namespace fhmodem {

// splitmix64; used for seed derivation so parallel schedules cannot
// reorder randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Per-(point, batch, stream) seed from a master seed. Documented scheme:
/// three chained splitmix64 rounds over master, point, batch, with the
/// stream tag separating independent uses (bits vs. noise) of one batch.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point,
                                 std::uint64_t batch, std::uint64_t stream = 0) {
    std::uint64_t s = splitmix64(master ^ 0xD6E8FEB86659FD93ULL);
    s = splitmix64(s ^ point);
    s = splitmix64(s ^ batch);
    return splitmix64(s ^ (stream * 0xA24BAED4963EE407ULL));
}

/// Gaussian sampler on top of std::mt19937_64 with a hand-rolled
/// Box-Muller transform. std::normal_distribution is implementation
/// defined; this keeps sample streams bit-reproducible everywhere.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    // uniform in (0,1]
    double uniform_pos() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }
    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal pair.
    void normal_pair(double& z0, double& z1) {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        z0 = r * std::cos(kTwoPi * u2);
        z1 = r * std::sin(kTwoPi * u2);
    }

    /// Circularly symmetric complex Gaussian with total variance `variance`
    /// (split equally between I and Q).
    cplx complex_normal(double variance) {
        double z0, z1;
        normal_pair(z0, z1);
        const double s = std::sqrt(variance * 0.5);
        return {s * z0, s * z1};
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

/// Deterministic random bit sequence.
inline std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed) {
    std::vector<std::uint8_t> bits(count);
    std::mt19937_64 engine(seed);
    std::uint64_t word = 0;
    int avail = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (avail == 0) {
            word = engine();
            avail = 64;
        }
        bits[i] = static_cast<std::uint8_t>(word & 1);
        word >>= 1;
        --avail;
    }
    return bits;
}

}  // namespace fhmodem
