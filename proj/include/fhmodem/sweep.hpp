#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhmodem/channel.hpp"
#include "fhmodem/metrics.hpp"
#include "fhmodem/types.hpp"
#include "fhmodem/waveform.hpp"

namespace fhmodem {

/// Deterministic Monte Carlo sweep description.
///
/// The waveform template carries a per-bit sub-pulse budget: the actual
/// sub-pulse duration for a modulation is bit_duration * bits-per-symbol,
/// which keeps the energy per bit identical across modulations (a D-QPSK
/// sub-pulse is twice as long as a D-BPSK one). Sweep captures are gapless
/// (PRI = Q * dt).
struct SweepSpec {
    int num_antennas = 1;
    int num_subpulses = 21;
    double freq_step = 250e3;       // Hz
    double bit_duration = 1e-6;     // seconds of sub-pulse per transmitted bit
    double sample_rate = 20e6;      // Hz
    std::vector<double> element_positions = {0.0};
    PhaseRamp phase_ramp = PhaseRamp::SubpulseLocal;
    FHCodeMatrix codes;             // empty -> constant code 10

    std::vector<Modulation> modulations = {Modulation::DBPSK};
    std::vector<double> snr_grid_db;                    // strictly increasing
    SnrConvention convention = SnrConvention::PerBit;
    std::uint64_t min_bits = 100000;                    // >= 1e4
    std::uint64_t max_errors = 0;                       // 0 = no early stop
    std::uint64_t batch_bits = 1000;                    // bits per simulated capture
    std::uint64_t master_seed = 1;
    ChannelState channel;                               // sweep channel template
    int workers = 0;                                    // 0 = hardware concurrency

    void validate() const;

    /// Concrete waveform configuration for one modulation of this sweep.
    WaveformConfig config_for(Modulation m) const;

    /// FH codes resolved against the template shape.
    FHCodeMatrix resolved_codes() const;
};

struct BERReport {
    std::uint64_t master_seed = 0;
    std::string config_hash;     // FNV-1a of the canonical spec serialization
    std::string timestamp;       // ISO 8601 UTC, informational only
    SnrConvention convention = SnrConvention::PerBit;
    std::vector<BERPoint> points;  // sorted by (modulation, snr)
};

/// Runs the sweep: per (modulation, SNR) point, seeded batches of
/// batch_bits bits are synthesized, passed through the channel, matched
/// filtered at the known pulse offsets and differentially decoded until
/// min_bits have been counted or max_errors reached. Batch seeds derive
/// from (master_seed, point index, batch index), and batches are always
/// aggregated in index order, so the result is identical for any worker
/// count. Erased symbols count as errors.
BERReport run_ber_sweep(const SweepSpec& spec);

/// Per-bit SNR (linear) for a grid value under the sweep's convention.
double per_bit_snr_linear(const SweepSpec& spec, Modulation m, double snr_db);

}  // namespace fhmodem
