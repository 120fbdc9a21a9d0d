#pragma once

#include <cstdint>
#include <vector>

#include "fhmodem/types.hpp"

namespace fhmodem {

/// Time origin of the hop exponential inside a pulse. SubpulseLocal restarts
/// the phase ramp at every sub-pulse boundary, which makes matched-filter
/// outputs independent of the sub-pulse index; PulseGlobal runs one ramp from
/// the pulse start and is kept for comparison.
enum class PhaseRamp { SubpulseLocal, PulseGlobal };

/// All transmit-side parameters of the FH/PSK waveform.
///
/// Defaults mirror the USRP bench configuration: 250 kHz hop step, 20 MHz
/// sample rate, single antenna, 1 us sub-pulse for D-BPSK. D-QPSK runs use a
/// 2 us sub-pulse so the energy per bit stays the same (twice the samples,
/// twice the bits per symbol).
struct WaveformConfig {
    int num_antennas = 1;                       // M
    int num_subpulses = 21;                     // Q
    double freq_step = 250e3;                   // Hz
    double subpulse_duration = 1e-6;            // s
    double pri = 21e-6;                         // s, pulse repetition interval
    double sample_rate = 20e6;                  // Hz
    Modulation modulation = Modulation::DBPSK;
    std::vector<double> element_positions = {0.0};  // d_m, wavelengths, d_1 = 0
    PhaseRamp phase_ramp = PhaseRamp::SubpulseLocal;

    /// Throws ConfigError unless all construction invariants hold:
    /// M >= 1, Q >= 2, Q*dt <= pri, dt*fs a positive integer, pri*fs an
    /// integer, element positions nondecreasing with d_1 = 0.
    void validate() const;

    int samples_per_subpulse() const;   // L = dt*fs
    std::int64_t samples_per_pri() const;
    int samples_per_pulse() const { return num_subpulses * samples_per_subpulse(); }
    int bits_per_pulse() const {
        return num_antennas * (num_subpulses - 1) * bits_per_symbol(modulation);
    }
    int samples_per_bit() const;        // per-antenna samples carrying one bit

    /// True when freq_step*subpulse_duration is an integer, i.e. the
    /// matched-filter bank is exactly orthogonal across hop codes. A false
    /// value is legal for single-antenna operation and is surfaced as a
    /// warning, not an error.
    bool filter_orthogonal() const;

    /// Bench-style defaults for a modulation (sub-pulse duration scaled by
    /// bits per symbol, gapless PRI).
    static WaveformConfig defaults(Modulation m);
};

/// M x Q hop codes c[m][q]. Codes may repeat across sub-pulses of one
/// antenna but never across antennas within a sub-pulse.
struct FHCodeMatrix {
    int num_antennas = 0;
    int num_subpulses = 0;
    std::vector<int> codes;  // row-major, antenna-major

    int at(int antenna, int subpulse) const {
        return codes[static_cast<std::size_t>(antenna) * num_subpulses + subpulse];
    }
    int& at(int antenna, int subpulse) {
        return codes[static_cast<std::size_t>(antenna) * num_subpulses + subpulse];
    }

    static FHCodeMatrix constant(int antennas, int subpulses, int value);
    /// Random matrix with per-column distinct codes drawn from [0, max_code].
    static FHCodeMatrix random_valid(int antennas, int subpulses, int max_code,
                                     std::uint64_t seed);
};

/// One hop-code collision: antennas `antenna_a` < `antenna_b` share a code
/// in column `subpulse`.
struct CodeViolation {
    int subpulse;
    int antenna_a;
    int antenna_b;
};

/// Returns every per-column collision (empty means the matrix is valid).
/// Throws DimensionError when the matrix shape is not antennas x subpulses.
std::vector<CodeViolation> validate_fh_codes(const FHCodeMatrix& codes,
                                             int antennas, int subpulses);

/// Per-pulse phase plan: absolute phases and the differential symbols they
/// were built from. phases[m][0] is always 0 (reference sub-pulse).
struct PhaseFrame {
    int num_antennas = 0;
    int num_subpulses = 0;
    std::vector<double> phases;         // M x Q, radians in [0, 2pi)
    std::vector<double> differentials;  // M x (Q-1), radians

    double phase(int antenna, int subpulse) const {
        return phases[static_cast<std::size_t>(antenna) * num_subpulses + subpulse];
    }
    double differential(int antenna, int step) const {
        return differentials[static_cast<std::size_t>(antenna) * (num_subpulses - 1) + step];
    }
};

/// Differential phase dictionary: {pi/2, 3pi/2} for D-BPSK,
/// {pi/4, 3pi/4, 5pi/4, 7pi/4} for D-QPSK (Gray coded).
std::vector<double> differential_dictionary(Modulation m);

/// Gray bit mapping between dictionary indices and symbol bits.
/// D-BPSK: 0 -> pi/2, 1 -> 3pi/2.
/// D-QPSK: 00 -> pi/4, 01 -> 3pi/4, 11 -> 5pi/4, 10 -> 7pi/4.
int bits_to_symbol_index(Modulation m, const std::uint8_t* bits);
void symbol_index_to_bits(Modulation m, int index, std::uint8_t* bits);

struct EncodeResult {
    std::vector<PhaseFrame> frames;
    std::size_t pad_bits = 0;  // trailing zero bits appended to fill the last frame
};

/// Differential encoder. Bits fill antennas first (m = 1..M), then phase
/// steps (q = 1..Q-1) within each antenna, then pulses. Trailing bits that
/// do not fill a frame are zero padded and the pad length reported so error
/// counting can exclude them; with allow_padding = false a non-aligned bit
/// count throws ConfigError instead.
EncodeResult encode_differential(const std::vector<std::uint8_t>& bits,
                                 const WaveformConfig& config,
                                 bool allow_padding = true);

/// Samples of one hop sub-pulse: sample k is
/// exp(j*(phase + 2*pi*code*freq_step*(sample_offset + k)/sample_rate)).
std::vector<cplx> subpulse_samples(int code, double freq_step, double sample_rate,
                                   int length, double phase, int sample_offset = 0);

/// One pulse per antenna, Q*L samples each, unit magnitude throughout.
std::vector<IQBuffer> synthesize_pulse(const WaveformConfig& config,
                                       const FHCodeMatrix& codes,
                                       const PhaseFrame& frame);

struct TrainSynthesis {
    std::vector<IQBuffer> tx;        // one buffer per antenna, N*pri samples
    std::vector<PhaseFrame> frames;  // one per pulse
    std::size_t pad_bits = 0;
};

/// Encodes `bits` and concatenates the resulting pulses at the PRI spacing,
/// zero-filled between pulses.
TrainSynthesis synthesize_train(const WaveformConfig& config,
                                const FHCodeMatrix& codes,
                                const std::vector<std::uint8_t>& bits);

}  // namespace fhmodem
