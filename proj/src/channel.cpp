#include "fhmodem/channel.hpp"

#include <cmath>

#include "fhmodem/rng.hpp"

namespace fhmodem {

void ChannelState::validate() const {
    if (noise_variance < 0.0) throw DomainError("noise_variance must be >= 0");
    if (iq_gain <= 0.0) throw DomainError("iq_gain must be positive");
    if (delay < 0) throw DomainError("delay must be >= 0 samples");
}

SteeringVector steering_vector(double theta, const std::vector<double>& positions) {
    if (positions.empty() || positions[0] != 0.0) {
        throw DimensionError("element positions must start with d_1 = 0");
    }
    SteeringVector sv;
    sv.entries.reserve(positions.size());
    const double s = std::sin(theta);
    for (double d : positions) {
        const double arg = -kTwoPi * d * s;
        sv.entries.push_back({std::cos(arg), std::sin(arg)});
    }
    return sv;
}

IQBuffer apply_iq_imbalance(const IQBuffer& in, double gain, double phase) {
    if (gain <= 0.0) throw DomainError("iq gain must be positive");
    IQBuffer out;
    out.sample_rate = in.sample_rate;
    out.samples.reserve(in.size());
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    for (const cplx& v : in.samples) {
        out.samples.emplace_back(v.real(), gain * (v.imag() * c + v.real() * s));
    }
    return out;
}

IQBuffer apply_channel(const std::vector<IQBuffer>& tx, const ChannelState& state,
                       std::uint64_t seed, std::int64_t pulse_stride,
                       const std::vector<double>& element_positions) {
    state.validate();
    if (tx.empty()) throw DimensionError("no transmit buffers");
    const std::size_t len = tx[0].size();
    const double fs = tx[0].sample_rate;
    for (const IQBuffer& b : tx) {
        if (b.size() != len || b.sample_rate != fs) {
            throw DimensionError("transmit buffers must share length and sample rate");
        }
    }
    std::vector<double> positions = element_positions;
    if (positions.empty()) {
        if (tx.size() > 1) {
            throw DimensionError("element positions required for multi-antenna transmit");
        }
        positions = {0.0};
    }
    if (positions.size() != tx.size()) {
        throw DimensionError("element positions must have one entry per antenna");
    }
    const SteeringVector sv = steering_vector(state.theta_c, positions);

    GaussianRng rng(seed);
    const std::size_t out_len = len + static_cast<std::size_t>(state.delay);
    IQBuffer out;
    out.sample_rate = fs;
    out.samples.assign(out_len, cplx{0.0, 0.0});

    // steering combination and channel gain, written at the delay offset
    cplx alpha = state.alpha_ch;
    const bool block_fading = state.fading == FadingMode::RayleighBlock && pulse_stride > 0;
    if (state.fading == FadingMode::RayleighBlock && !block_fading) {
        alpha = rng.complex_normal(1.0);  // single draw for the whole capture
    }
    for (std::size_t k = 0; k < len; ++k) {
        if (block_fading && k % static_cast<std::size_t>(pulse_stride) == 0) {
            alpha = rng.complex_normal(1.0);
        }
        cplx combined{0.0, 0.0};
        for (std::size_t m = 0; m < tx.size(); ++m) {
            combined += sv.entries[m] * tx[m].samples[k];
        }
        out.samples[k + static_cast<std::size_t>(state.delay)] = alpha * combined;
    }

    if (state.noise_variance > 0.0) {
        for (cplx& v : out.samples) v += rng.complex_normal(state.noise_variance);
    }
    if (state.dc_offset != cplx{0.0, 0.0}) {
        for (cplx& v : out.samples) v += state.dc_offset;
    }
    if (state.iq_gain != 1.0 || state.iq_phase != 0.0) {
        out = apply_iq_imbalance(out, state.iq_gain, state.iq_phase);
    }
    return out;
}

double calibrate_noise_for_snr(double signal_power, double target_snr_linear) {
    if (signal_power <= 0.0) throw DomainError("signal power must be positive");
    if (target_snr_linear <= 0.0) throw DomainError("target SNR must be positive");
    return signal_power / target_snr_linear;
}

}  // namespace fhmodem
