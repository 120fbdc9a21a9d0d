#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhmodem {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Complex baseband sample sequence; the universal signal currency.
struct IQBuffer {
    std::vector<cplx> samples;
    double sample_rate = 0.0;  // Hz

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

enum class Modulation { DBPSK, DQPSK };

inline int bits_per_symbol(Modulation m) { return m == Modulation::DBPSK ? 1 : 2; }
inline int dictionary_size(Modulation m) { return m == Modulation::DBPSK ? 2 : 4; }

inline const char* modulation_name(Modulation m) {
    return m == Modulation::DBPSK ? "D-BPSK" : "D-QPSK";
}

// Error kinds used throughout; messages carry the specifics.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};
struct NoPulseFoundError : std::runtime_error {
    explicit NoPulseFoundError(const std::string& what) : std::runtime_error(what) {}
};

/// Wrap an angle into [0, 2*pi).
inline double wrap_2pi(double x) {
    double y = std::fmod(x, kTwoPi);
    if (y < 0.0) y += kTwoPi;
    if (y >= kTwoPi) y = 0.0;
    return y;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace fhmodem
