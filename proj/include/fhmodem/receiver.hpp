#pragma once

#include <cstdint>
#include <vector>

#include "fhmodem/types.hpp"
#include "fhmodem/waveform.hpp"

namespace fhmodem {

/// Matched-filter bank outputs y[n][m][q], normalized by the samples per
/// sub-pulse so a clean unit-gain channel yields unit-modulus entries.
struct MatchedFilterOutput {
    int num_pulses = 0;
    int num_antennas = 0;
    int num_subpulses = 0;
    int samples_per_subpulse = 0;  // normalization divisor L
    std::vector<cplx> y;           // pulse-major, then antenna, then sub-pulse

    cplx at(int pulse, int antenna, int subpulse) const {
        return y[(static_cast<std::size_t>(pulse) * num_antennas + antenna) * num_subpulses +
                 subpulse];
    }
    cplx& at(int pulse, int antenna, int subpulse) {
        return y[(static_cast<std::size_t>(pulse) * num_antennas + antenna) * num_subpulses +
                 subpulse];
    }
};

/// Differential decoding result. One symbol per (pulse, antenna, phase
/// step); bits are demapped in the encoder's fill order. A symbol whose
/// matched-filter input was exactly zero is flagged as an erasure and must
/// be counted as an error by the caller.
struct DecodedFrame {
    int num_pulses = 0;
    int num_antennas = 0;
    int num_subpulses = 0;
    Modulation modulation = Modulation::DBPSK;
    std::vector<double> delta_hat;        // estimated differentials, [0, 2pi)
    std::vector<int> symbols;             // dictionary indices
    std::vector<std::uint8_t> bits;
    std::vector<std::uint8_t> erasures;   // per symbol, 1 = degenerate input
    std::size_t erasure_count = 0;

    std::size_t symbols_per_pulse() const {
        return static_cast<std::size_t>(num_antennas) * (num_subpulses - 1);
    }
};

/// Subtracts the complex mean. Throws DomainError on an empty buffer.
IQBuffer remove_dc_bias(const IQBuffer& rx);

/// Exact algebraic inverse of apply_iq_imbalance for |phase| < pi/2.
IQBuffer correct_iq_imbalance(const IQBuffer& rx, double gain, double phase);

/// Arg-max lag of |cross-correlation| between rx and a known reference,
/// ties broken toward the smallest lag. The reference must not be longer
/// than rx.
std::int64_t estimate_delay(const IQBuffer& rx, const IQBuffer& reference);

/// Correlates each pulse window against the hop sub-pulse templates.
/// pulse_offsets holds the starting sample of every pulse; delay must
/// already be compensated (offsets may simply include it).
MatchedFilterOutput matched_filter(const IQBuffer& rx, const FHCodeMatrix& codes,
                                   const WaveformConfig& config,
                                   const std::vector<std::int64_t>& pulse_offsets);

/// Known-CSI phase baseline: angle(y) - psi_ch + 2*pi*d_m*sin(theta_c),
/// wrapped to [0, 2pi). Same layout as the matched-filter output.
std::vector<double> estimate_phases_coherent(const MatchedFilterOutput& y,
                                             double psi_ch, double theta_c,
                                             const std::vector<double>& positions);

/// CSI-free differential decoder: delta_hat = arg(y_{q+1} * conj(y_q))
/// wrapped to [0, 2pi), hard decision to the nearest dictionary point in
/// angular distance (exact midpoints resolve toward the smaller phase).
DecodedFrame decode_differential(const MatchedFilterOutput& y, Modulation modulation);

struct CaptureDiagnostics {
    std::int64_t delay = 0;
    double sync_peak = 0.0;
    double sync_median = 0.0;
    int num_pulses = 0;
    std::size_t searched_lags = 0;
};

/// Offline capture pipeline: DC-bias removal, IQ-imbalance correction,
/// correlation delay search, matched filtering, differential decoding.
///
/// The delay search correlates against a comb of the known zero-phase
/// reference sub-pulses (the first sub-pulse of up to 64 pulses at the PRI
/// spacing). The comb sum is coherent across pulses and independent of the
/// embedded data, and every tooth that fits after a candidate lag
/// contributes, so the true start of a periodic train outweighs its own
/// PRI-shifted replicas. The peak must exceed 5x the median of the searched
/// correlation sequence or NoPulseFoundError is thrown; the test is skipped
/// when it has no statistical power (under 16 searched lags, or a capture
/// short enough that fewer than 16 comb teeth ever fit).
///
/// max_lag < 0 searches up to 8 PRIs; the IQ imbalance parameters are
/// treated as known to the corrector.
DecodedFrame decode_capture(const IQBuffer& rx, const FHCodeMatrix& codes,
                            const WaveformConfig& config, double iq_gain = 1.0,
                            double iq_phase = 0.0, std::int64_t max_lag = -1,
                            CaptureDiagnostics* diagnostics = nullptr);

}  // namespace fhmodem
