#pragma once

#include <cstdint>
#include <vector>

#include "fhmodem/types.hpp"

namespace fhmodem {

enum class FadingMode { Fixed, RayleighBlock };

/// Propagation state plus receiver front-end impairments. alpha_ch is the
/// flat-fading complex gain; in RayleighBlock mode it is redrawn from a
/// unit-variance circularly symmetric Gaussian once per pulse.
struct ChannelState {
    cplx alpha_ch{1.0, 0.0};
    double theta_c = 0.0;          // arrival angle, radians
    double noise_variance = 0.0;   // sigma_w^2, total complex per-sample variance
    std::int64_t delay = 0;        // integer samples
    cplx dc_offset{0.0, 0.0};
    double iq_gain = 1.0;          // 1 = ideal
    double iq_phase = 0.0;         // radians, 0 = ideal
    FadingMode fading = FadingMode::Fixed;

    void validate() const;
};

/// Unit-modulus array response, entry m = exp(-j*2*pi*d_m*sin(theta)).
struct SteeringVector {
    std::vector<cplx> entries;
};

/// positions are element displacements in wavelengths with positions[0] = 0.
SteeringVector steering_vector(double theta, const std::vector<double>& positions);

/// Receiver-side IQ imbalance model: I is kept, Q is scaled by g and rotated
/// by phi: out = Re(s) + j*g*(Im(s)*cos(phi) + Re(s)*sin(phi)).
IQBuffer apply_iq_imbalance(const IQBuffer& in, double gain, double phase);

/// Single-antenna receive signal: delay-shifted (zero-prefixed) copy of
/// alpha * sum_m a_m(theta) * tx_m, plus complex white Gaussian noise of
/// variance sigma_w^2, then the DC offset, then IQ imbalance. Deterministic
/// for a given seed. pulse_stride > 0 enables block fading: in RayleighBlock
/// mode the channel gain is redrawn at every multiple of pulse_stride.
/// element_positions may be empty for a single transmit antenna.
IQBuffer apply_channel(const std::vector<IQBuffer>& tx, const ChannelState& state,
                       std::uint64_t seed, std::int64_t pulse_stride = 0,
                       const std::vector<double>& element_positions = {});

/// sigma_w^2 such that (P_signal - P_noise)/P_noise style SNR equals the
/// target in expectation: sigma_w^2 = signal_power / target_snr.
double calibrate_noise_for_snr(double signal_power, double target_snr_linear);

}  // namespace fhmodem
