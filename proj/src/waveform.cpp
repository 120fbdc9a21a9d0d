#include "fhmodem/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fhmodem/rng.hpp"

namespace fhmodem {

namespace {

// Nearest-integer test with a tolerance scaled for products of bench-sized
// rates and durations.
bool near_integer(double x, double tol = 1e-9) {
    return std::abs(x - std::llround(x)) <= tol * std::max(1.0, std::abs(x));
}

}  // namespace

void WaveformConfig::validate() const {
    if (num_antennas < 1) throw ConfigError("num_antennas must be >= 1");
    if (num_subpulses < 2) throw ConfigError("num_subpulses must be >= 2");
    if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
    if (subpulse_duration <= 0.0) throw ConfigError("subpulse_duration must be positive");
    if (freq_step < 0.0) throw ConfigError("freq_step must be nonnegative");
    if (num_subpulses * subpulse_duration > pri * (1.0 + 1e-12)) {
        throw ConfigError("sub-pulses do not fit inside one PRI (Q*dt > pri)");
    }
    const double l = subpulse_duration * sample_rate;
    if (!near_integer(l) || std::llround(l) < 1) {
        std::ostringstream msg;
        msg << "subpulse_duration*sample_rate = " << l
            << " is not a positive integer sample count";
        throw ConfigError(msg.str());
    }
    if (!near_integer(pri * sample_rate)) {
        throw ConfigError("pri*sample_rate is not an integer sample count");
    }
    if (static_cast<int>(element_positions.size()) != num_antennas) {
        throw ConfigError("element_positions must have one entry per antenna");
    }
    if (element_positions[0] != 0.0) {
        throw ConfigError("element_positions[0] must be 0");
    }
    if (!std::is_sorted(element_positions.begin(), element_positions.end())) {
        throw ConfigError("element_positions must be nondecreasing");
    }
}

int WaveformConfig::samples_per_subpulse() const {
    return static_cast<int>(std::llround(subpulse_duration * sample_rate));
}

std::int64_t WaveformConfig::samples_per_pri() const {
    return std::llround(pri * sample_rate);
}

int WaveformConfig::samples_per_bit() const {
    return samples_per_subpulse() / bits_per_symbol(modulation);
}

bool WaveformConfig::filter_orthogonal() const {
    return near_integer(freq_step * subpulse_duration);
}

WaveformConfig WaveformConfig::defaults(Modulation m) {
    WaveformConfig cfg;
    cfg.modulation = m;
    cfg.subpulse_duration = 1e-6 * bits_per_symbol(m);
    cfg.pri = cfg.num_subpulses * cfg.subpulse_duration;
    return cfg;
}

FHCodeMatrix FHCodeMatrix::constant(int antennas, int subpulses, int value) {
    FHCodeMatrix m;
    m.num_antennas = antennas;
    m.num_subpulses = subpulses;
    m.codes.assign(static_cast<std::size_t>(antennas) * subpulses, value);
    return m;
}

FHCodeMatrix FHCodeMatrix::random_valid(int antennas, int subpulses, int max_code,
                                        std::uint64_t seed) {
    if (max_code + 1 < antennas) {
        throw ConfigError("need at least num_antennas distinct code values");
    }
    FHCodeMatrix m;
    m.num_antennas = antennas;
    m.num_subpulses = subpulses;
    m.codes.resize(static_cast<std::size_t>(antennas) * subpulses);
    std::mt19937_64 engine(seed);
    std::vector<int> pool(max_code + 1);
    for (int i = 0; i <= max_code; ++i) pool[i] = i;
    for (int q = 0; q < subpulses; ++q) {
        // partial Fisher-Yates: first `antennas` entries become the column
        for (int i = 0; i < antennas; ++i) {
            const int j = i + static_cast<int>(engine() % (pool.size() - i));
            std::swap(pool[i], pool[j]);
            m.at(i, q) = pool[i];
        }
    }
    return m;
}

std::vector<CodeViolation> validate_fh_codes(const FHCodeMatrix& codes,
                                             int antennas, int subpulses) {
    if (codes.num_antennas != antennas || codes.num_subpulses != subpulses ||
        codes.codes.size() != static_cast<std::size_t>(antennas) * subpulses) {
        throw DimensionError("FH code matrix shape does not match antennas x subpulses");
    }
    std::vector<CodeViolation> violations;
    for (int q = 0; q < subpulses; ++q) {
        for (int a = 0; a < antennas; ++a) {
            for (int b = a + 1; b < antennas; ++b) {
                if (codes.at(a, q) == codes.at(b, q)) {
                    violations.push_back({q, a, b});
                }
            }
        }
    }
    return violations;
}

std::vector<double> differential_dictionary(Modulation m) {
    const int j = dictionary_size(m);
    std::vector<double> dict(j);
    for (int i = 0; i < j; ++i) dict[i] = kTwoPi / (2.0 * j) + i * (kTwoPi / j);
    return dict;
}

int bits_to_symbol_index(Modulation m, const std::uint8_t* bits) {
    if (m == Modulation::DBPSK) return bits[0] ? 1 : 0;
    // Gray order around the circle: 00, 01, 11, 10
    const int g = ((bits[0] ? 1 : 0) << 1) | (bits[1] ? 1 : 0);
    return g ^ (g >> 1);
}

void symbol_index_to_bits(Modulation m, int index, std::uint8_t* bits) {
    if (m == Modulation::DBPSK) {
        bits[0] = static_cast<std::uint8_t>(index & 1);
        return;
    }
    const int gray = index ^ (index >> 1);  // 0,1,3,2 -> bit pairs 00,01,11,10
    bits[0] = static_cast<std::uint8_t>((gray >> 1) & 1);
    bits[1] = static_cast<std::uint8_t>(gray & 1);
}

EncodeResult encode_differential(const std::vector<std::uint8_t>& bits,
                                 const WaveformConfig& config,
                                 bool allow_padding) {
    config.validate();
    const int per_symbol = bits_per_symbol(config.modulation);
    const std::size_t per_frame = static_cast<std::size_t>(config.bits_per_pulse());
    if (bits.size() % per_frame != 0 && !allow_padding) {
        throw ConfigError("bit count does not align to whole frames and padding is disabled");
    }
    const std::size_t num_frames = (bits.size() + per_frame - 1) / per_frame;
    std::vector<std::uint8_t> padded = bits;
    const std::size_t pad = num_frames * per_frame - bits.size();
    padded.resize(bits.size() + pad, 0);

    EncodeResult result;
    result.pad_bits = pad;
    result.frames.reserve(num_frames);
    const std::vector<double> dict = differential_dictionary(config.modulation);
    const int m_count = config.num_antennas;
    const int q_count = config.num_subpulses;
    std::size_t pos = 0;
    for (std::size_t n = 0; n < num_frames; ++n) {
        PhaseFrame frame;
        frame.num_antennas = m_count;
        frame.num_subpulses = q_count;
        frame.phases.assign(static_cast<std::size_t>(m_count) * q_count, 0.0);
        frame.differentials.assign(static_cast<std::size_t>(m_count) * (q_count - 1), 0.0);
        for (int m = 0; m < m_count; ++m) {
            double omega = 0.0;  // reference sub-pulse
            for (int q = 0; q + 1 < q_count; ++q) {
                const int idx = bits_to_symbol_index(config.modulation, &padded[pos]);
                pos += per_symbol;
                const double delta = dict[static_cast<std::size_t>(idx)];
                frame.differentials[static_cast<std::size_t>(m) * (q_count - 1) + q] = delta;
                omega = wrap_2pi(omega + delta);
                frame.phases[static_cast<std::size_t>(m) * q_count + q + 1] = omega;
            }
        }
        result.frames.push_back(std::move(frame));
    }
    return result;
}

std::vector<cplx> subpulse_samples(int code, double freq_step, double sample_rate,
                                   int length, double phase, int sample_offset) {
    std::vector<cplx> out(static_cast<std::size_t>(length));
    const double step = kTwoPi * code * freq_step / sample_rate;
    for (int k = 0; k < length; ++k) {
        const double arg = phase + step * (sample_offset + k);
        out[static_cast<std::size_t>(k)] = {std::cos(arg), std::sin(arg)};
    }
    return out;
}

std::vector<IQBuffer> synthesize_pulse(const WaveformConfig& config,
                                       const FHCodeMatrix& codes,
                                       const PhaseFrame& frame) {
    config.validate();
    if (codes.num_antennas != config.num_antennas ||
        codes.num_subpulses != config.num_subpulses) {
        throw DimensionError("FH code matrix shape does not match the configuration");
    }
    if (frame.num_antennas != config.num_antennas ||
        frame.num_subpulses != config.num_subpulses) {
        throw DimensionError("phase frame shape does not match the configuration");
    }
    const int l = config.samples_per_subpulse();
    const int q_count = config.num_subpulses;
    std::vector<IQBuffer> out(static_cast<std::size_t>(config.num_antennas));
    for (int m = 0; m < config.num_antennas; ++m) {
        IQBuffer& buf = out[static_cast<std::size_t>(m)];
        buf.sample_rate = config.sample_rate;
        buf.samples.reserve(static_cast<std::size_t>(q_count) * l);
        for (int q = 0; q < q_count; ++q) {
            const int offset = config.phase_ramp == PhaseRamp::PulseGlobal ? q * l : 0;
            auto sub = subpulse_samples(codes.at(m, q), config.freq_step,
                                        config.sample_rate, l, frame.phase(m, q), offset);
            buf.samples.insert(buf.samples.end(), sub.begin(), sub.end());
        }
    }
    return out;
}

TrainSynthesis synthesize_train(const WaveformConfig& config,
                                const FHCodeMatrix& codes,
                                const std::vector<std::uint8_t>& bits) {
    TrainSynthesis train;
    EncodeResult encoded = encode_differential(bits, config);
    train.pad_bits = encoded.pad_bits;
    const std::int64_t pri_samples = config.samples_per_pri();
    const std::size_t total =
        static_cast<std::size_t>(pri_samples) * encoded.frames.size();
    train.tx.assign(static_cast<std::size_t>(config.num_antennas), IQBuffer{});
    for (auto& buf : train.tx) {
        buf.sample_rate = config.sample_rate;
        buf.samples.assign(total, cplx{0.0, 0.0});
    }
    for (std::size_t n = 0; n < encoded.frames.size(); ++n) {
        auto pulse = synthesize_pulse(config, codes, encoded.frames[n]);
        const std::size_t start = static_cast<std::size_t>(pri_samples) * n;
        for (int m = 0; m < config.num_antennas; ++m) {
            std::copy(pulse[static_cast<std::size_t>(m)].samples.begin(),
                      pulse[static_cast<std::size_t>(m)].samples.end(),
                      train.tx[static_cast<std::size_t>(m)].samples.begin() + start);
        }
    }
    train.frames = std::move(encoded.frames);
    return train;
}

}  // namespace fhmodem
