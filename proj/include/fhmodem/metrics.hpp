#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fhmodem/types.hpp"

namespace fhmodem {

enum class SnrConvention { PerSubpulseSample, PerBit };

inline const char* snr_convention_name(SnrConvention c) {
    return c == SnrConvention::PerSubpulseSample ? "per-subpulse-sample" : "per-bit";
}

/// One point of a BER-vs-SNR curve.
struct BERPoint {
    Modulation modulation = Modulation::DBPSK;
    double snr_db = 0.0;
    SnrConvention convention = SnrConvention::PerBit;
    std::uint64_t bits_sent = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    double std_error = 0.0;  // binomial sqrt(p*(1-p)/n)
    std::optional<double> oracle_ber;
};

struct BerCount {
    std::uint64_t bits = 0;
    std::uint64_t errors = 0;
    double ber = 0.0;
};

/// Exact Hamming-distance ratio. Throws DimensionError on length mismatch.
/// Pad bits must be excluded by the caller.
BerCount compute_ber(const std::vector<std::uint8_t>& tx_bits,
                     const std::vector<std::uint8_t>& rx_bits);

struct SnrEstimate {
    double snr_linear = 0.0;
    bool negative = false;  // finite-sample estimate came out below zero
};

/// (P_noisy - P_noise) / P_noise from equal-length signal-present and
/// noise-only captures, power = mean |s|^2. Negative estimates are returned
/// as-is with the warning flag set.
SnrEstimate estimate_snr(const IQBuffer& noisy_capture, const IQBuffer& noise_capture);

/// Closed-form differential BPSK reference: 0.5 * exp(-gamma_b).
double theoretical_dbpsk_ber(double gamma_b_linear);

struct OracleEstimate {
    double ber = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
};

/// Symbol-level Monte Carlo oracle, independent of the waveform pipeline:
/// unit phasor pairs perturbed by complex Gaussian noise sized for the
/// per-bit SNR, decided by the phase of y2*conj(y1) against the dictionary.
OracleEstimate oracle_dpsk_ber(Modulation modulation, double gamma_b_linear,
                               std::uint64_t trials, std::uint64_t seed);

}  // namespace fhmodem
