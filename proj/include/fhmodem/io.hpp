#pragma once

#include <string>
#include <vector>

#include "fhmodem/sweep.hpp"
#include "fhmodem/types.hpp"
#include "fhmodem/waveform.hpp"

namespace fhmodem {

/// Binary IQ capture: little-endian 32-bit floats, interleaved I,Q, plus a
/// JSON sidecar at <path>.json carrying sample_rate_hz and num_samples.
/// Reading rejects payloads with an odd float count, a missing sidecar, a
/// num_samples mismatch, or non-finite samples.
void write_iq_file(const IQBuffer& buffer, const std::string& path);
IQBuffer read_iq_file(const std::string& path);

/// CSV alternative (header `index,i,q`, one sample per row). The sample rate
/// still travels in the <path>.json sidecar.
void write_iq_csv(const IQBuffer& buffer, const std::string& path);
IQBuffer read_iq_csv(const std::string& path);

/// Dispatch on extension: ".csv" uses the CSV codec, anything else binary.
void write_iq_auto(const IQBuffer& buffer, const std::string& path);
IQBuffer read_iq_auto(const std::string& path);

/// Plain-text bit files: '0'/'1' characters, whitespace ignored on read.
void write_bits_file(const std::vector<std::uint8_t>& bits, const std::string& path);
std::vector<std::uint8_t> read_bits_file(const std::string& path);

/// Plot-ready report: header
/// `modulation,snr_db,snr_convention,bits,errors,ber,stderr,oracle_ber`,
/// one row per point in (modulation, snr) order, shortest round-trip float
/// formatting, empty oracle field when no closed form applies.
void write_ber_csv(const BERReport& report, const std::string& path);

/// "a+bj" complex literals: "1", "-2.5", "j", "-j", "0.3j", "1+2j", "1e-3-4e-2j".
cplx parse_complex(const std::string& text);

/// JSON config loaders. Every key is optional and falls back to the
/// WaveformConfig defaults; unknown keys are rejected rather than silently
/// ignored.
///
/// Waveform keys: num_antennas, num_subpulses, freq_step_hz,
/// subpulse_duration_s, pri_s, sample_rate_hz, modulation,
/// element_positions_wavelengths, phase_ramp, fh_code, fh_codes.
WaveformConfig load_waveform_config(const std::string& path);

/// Codes given next to a waveform config: fh_codes as an MxQ matrix, fh_code
/// as one constant applied everywhere, default constant 10.
FHCodeMatrix load_fh_codes_from_config(const std::string& path, const WaveformConfig& cfg);

/// Sweep keys: waveform (block as above but with bit_duration_s instead of
/// subpulse_duration_s/pri_s/modulation), modulations, snr_grid_db,
/// snr_convention, min_bits, max_errors, batch_bits, seed, workers,
/// channel (alpha, theta_rad, delay_samples, dc_offset, iq_gain, iq_phase,
/// fading). Complex values are "a+bj" strings or [re, im] pairs.
SweepSpec load_sweep_spec(const std::string& path);

Modulation parse_modulation(const std::string& name);
SnrConvention parse_snr_convention(const std::string& name);

}  // namespace fhmodem
