#include "fhmodem/metrics.hpp"

#include <cmath>

#include "fhmodem/rng.hpp"
#include "fhmodem/waveform.hpp"

namespace fhmodem {

BerCount compute_ber(const std::vector<std::uint8_t>& tx_bits,
                     const std::vector<std::uint8_t>& rx_bits) {
    if (tx_bits.size() != rx_bits.size()) {
        throw DimensionError("bit sequences must have equal length");
    }
    BerCount count;
    count.bits = tx_bits.size();
    for (std::size_t i = 0; i < tx_bits.size(); ++i) {
        if ((tx_bits[i] != 0) != (rx_bits[i] != 0)) ++count.errors;
    }
    count.ber = count.bits == 0 ? 0.0
                                : static_cast<double>(count.errors) /
                                      static_cast<double>(count.bits);
    return count;
}

namespace {

double mean_power(const IQBuffer& buf) {
    double acc = 0.0;
    for (const cplx& v : buf.samples) acc += std::norm(v);
    return acc / static_cast<double>(buf.size());
}

}  // namespace

SnrEstimate estimate_snr(const IQBuffer& noisy_capture, const IQBuffer& noise_capture) {
    if (noisy_capture.size() != noise_capture.size()) {
        throw DimensionError("both captures must use the same number of samples");
    }
    if (noisy_capture.empty()) throw DimensionError("captures must not be empty");
    const double p_noise = mean_power(noise_capture);
    if (p_noise <= 0.0) throw DomainError("noise capture has zero power");
    const double p_noisy = mean_power(noisy_capture);
    SnrEstimate est;
    est.snr_linear = (p_noisy - p_noise) / p_noise;
    est.negative = est.snr_linear < 0.0;
    return est;
}

double theoretical_dbpsk_ber(double gamma_b_linear) {
    if (gamma_b_linear < 0.0) throw DomainError("per-bit SNR must be >= 0");
    return 0.5 * std::exp(-gamma_b_linear);
}

OracleEstimate oracle_dpsk_ber(Modulation modulation, double gamma_b_linear,
                               std::uint64_t trials, std::uint64_t seed) {
    if (gamma_b_linear <= 0.0) throw DomainError("per-bit SNR must be positive");
    const int per_symbol = bits_per_symbol(modulation);
    const std::vector<double> dict = differential_dictionary(modulation);
    // gamma_sym = bits/symbol * gamma_b; noise variance sized for unit phasors
    const double variance = 1.0 / (gamma_b_linear * per_symbol);

    GaussianRng rng(seed);
    std::uint64_t bit_errors = 0;
    std::uint8_t tx_bits[2];
    std::uint8_t rx_bits[2];
    for (std::uint64_t t = 0; t < trials; ++t) {
        const int tx_index = static_cast<int>(rng.raw() % dict.size());
        const double base = rng.uniform() * kTwoPi;
        const cplx y1 = cplx{std::cos(base), std::sin(base)} + rng.complex_normal(variance);
        const double rot = base + dict[static_cast<std::size_t>(tx_index)];
        const cplx y2 = cplx{std::cos(rot), std::sin(rot)} + rng.complex_normal(variance);

        const double delta = wrap_2pi(std::arg(y2 * std::conj(y1)));
        int rx_index = 0;
        double best = kTwoPi;
        for (int i = 0; i < static_cast<int>(dict.size()); ++i) {
            double d = std::abs(delta - dict[static_cast<std::size_t>(i)]);
            if (d > kTwoPi / 2.0) d = kTwoPi - d;
            if (d < best) {
                best = d;
                rx_index = i;
            }
        }
        symbol_index_to_bits(modulation, tx_index, tx_bits);
        symbol_index_to_bits(modulation, rx_index, rx_bits);
        for (int b = 0; b < per_symbol; ++b) {
            if (tx_bits[b] != rx_bits[b]) ++bit_errors;
        }
    }
    OracleEstimate est;
    est.trials = trials;
    const double n_bits = static_cast<double>(trials) * per_symbol;
    est.ber = static_cast<double>(bit_errors) / n_bits;
    est.std_error = std::sqrt(std::max(est.ber * (1.0 - est.ber), 0.0) / n_bits);
    return est;
}

}  // namespace fhmodem
