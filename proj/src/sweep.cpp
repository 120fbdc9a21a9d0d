#include "fhmodem/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include "fhmodem/receiver.hpp"
#include "fhmodem/rng.hpp"

namespace fhmodem {

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Canonical field dump so the hash is stable across runs but sensitive to
// every knob that affects the numbers.
std::string canonical_string(const SweepSpec& s) {
    std::ostringstream os;
    os.precision(17);
    os << "M=" << s.num_antennas << ";Q=" << s.num_subpulses << ";df=" << s.freq_step
       << ";tb=" << s.bit_duration << ";fs=" << s.sample_rate << ";ramp="
       << (s.phase_ramp == PhaseRamp::SubpulseLocal ? "local" : "global") << ";pos=";
    for (double d : s.element_positions) os << d << ",";
    os << ";codes=";
    for (int c : s.codes.codes) os << c << ",";
    os << ";mods=";
    for (Modulation m : s.modulations) os << modulation_name(m) << ",";
    os << ";snr=";
    for (double g : s.snr_grid_db) os << g << ",";
    os << ";conv=" << snr_convention_name(s.convention) << ";min_bits=" << s.min_bits
       << ";max_errors=" << s.max_errors << ";batch_bits=" << s.batch_bits
       << ";seed=" << s.master_seed << ";alpha=" << s.channel.alpha_ch.real() << "+"
       << s.channel.alpha_ch.imag() << "j;theta=" << s.channel.theta_c
       << ";delay=" << s.channel.delay << ";dc=" << s.channel.dc_offset.real() << "+"
       << s.channel.dc_offset.imag() << "j;iqg=" << s.channel.iq_gain
       << ";iqp=" << s.channel.iq_phase << ";fading="
       << (s.channel.fading == FadingMode::Fixed ? "fixed" : "rayleigh-block");
    return os.str();
}

std::string iso8601_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
#if defined(_WIN32)
    gmtime_s(&tm, &t);
#else
    gmtime_r(&t, &tm);
#endif
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct BatchResult {
    std::uint64_t bits = 0;
    std::uint64_t errors = 0;
};

// One capture: batch_bits random bits through synthesis, channel, known-timing
// matched filtering and differential decoding. Erased symbols are errors.
BatchResult run_batch(const SweepSpec& spec, const WaveformConfig& cfg,
                      const FHCodeMatrix& codes, const ChannelState& chan,
                      std::uint64_t point_index, std::uint64_t batch_index) {
    const std::vector<std::uint8_t> tx_bits =
        random_bits(spec.batch_bits, derive_seed(spec.master_seed, point_index, batch_index, 0));

    TrainSynthesis train = synthesize_train(cfg, codes, tx_bits);
    IQBuffer rx = apply_channel(train.tx, chan,
                                derive_seed(spec.master_seed, point_index, batch_index, 1),
                                cfg.samples_per_pri(), spec.element_positions);

    if (chan.dc_offset != cplx{0.0, 0.0}) rx = remove_dc_bias(rx);
    if (chan.iq_gain != 1.0 || chan.iq_phase != 0.0)
        rx = correct_iq_imbalance(rx, chan.iq_gain, chan.iq_phase);

    std::vector<std::int64_t> offsets(train.frames.size());
    for (std::size_t n = 0; n < offsets.size(); ++n)
        offsets[n] = chan.delay + static_cast<std::int64_t>(n) * cfg.samples_per_pri();

    MatchedFilterOutput y = matched_filter(rx, codes, cfg, offsets);
    DecodedFrame decoded = decode_differential(y, cfg.modulation);

    const int bps = bits_per_symbol(cfg.modulation);
    BatchResult out;
    out.bits = tx_bits.size();
    for (std::size_t i = 0; i < tx_bits.size(); ++i) {
        const std::size_t symbol = i / bps;
        if (decoded.erasures[symbol] || decoded.bits[i] != tx_bits[i]) ++out.errors;
    }
    return out;
}

BERPoint run_point(const SweepSpec& spec, const WaveformConfig& cfg,
                   const FHCodeMatrix& codes, double snr_db, std::uint64_t point_index,
                   int workers) {
    const double gamma_b = per_bit_snr_linear(spec, cfg.modulation, snr_db);

    // Per-bit SNR is per-antenna bit energy over the noise variance; folding
    // the mean channel power into the calibration keeps the grid value exact.
    ChannelState chan = spec.channel;
    const double mean_gain_power = chan.fading == FadingMode::RayleighBlock
                                       ? 1.0
                                       : std::norm(chan.alpha_ch);
    chan.noise_variance = mean_gain_power * cfg.samples_per_bit() / gamma_b;

    const std::uint64_t batch_count = (spec.min_bits + spec.batch_bits - 1) / spec.batch_bits;

    BERPoint point;
    point.modulation = cfg.modulation;
    point.snr_db = snr_db;
    point.convention = spec.convention;

    std::uint64_t next = 0;     // next batch to launch
    std::uint64_t scanned = 0;  // batches folded into the totals, in index order
    bool stopped = false;
    std::vector<BatchResult> window;
    while (scanned < batch_count && !stopped) {
        const std::uint64_t chunk =
            std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), batch_count - next);
        window.assign(chunk, BatchResult{});
        if (workers > 1 && chunk > 1) {
            std::vector<std::future<BatchResult>> futures;
            futures.reserve(chunk);
            for (std::uint64_t k = 0; k < chunk; ++k)
                futures.push_back(std::async(std::launch::async, run_batch, std::cref(spec),
                                             std::cref(cfg), std::cref(codes), std::cref(chan),
                                             point_index, next + k));
            for (std::uint64_t k = 0; k < chunk; ++k) window[k] = futures[k].get();
        } else {
            for (std::uint64_t k = 0; k < chunk; ++k)
                window[k] = run_batch(spec, cfg, codes, chan, point_index, next + k);
        }
        next += chunk;
        // Sequential scan keeps early stopping independent of the worker
        // count: a batch is only counted once every earlier one is counted.
        for (std::uint64_t k = 0; k < chunk; ++k) {
            point.bits_sent += window[k].bits;
            point.bit_errors += window[k].errors;
            ++scanned;
            if (spec.max_errors > 0 && point.bit_errors >= spec.max_errors) {
                stopped = true;
                break;
            }
        }
    }

    point.ber = point.bits_sent == 0
                    ? 0.0
                    : static_cast<double>(point.bit_errors) / static_cast<double>(point.bits_sent);
    point.std_error = point.bits_sent == 0
                          ? 0.0
                          : std::sqrt(point.ber * (1.0 - point.ber) /
                                      static_cast<double>(point.bits_sent));
    if (cfg.modulation == Modulation::DBPSK) {
        point.oracle_ber = chan.fading == FadingMode::RayleighBlock
                               ? 0.5 / (1.0 + gamma_b)
                               : theoretical_dbpsk_ber(gamma_b);
    }
    return point;
}

}  // namespace

void SweepSpec::validate() const {
    if (modulations.empty()) throw ConfigError("sweep needs at least one modulation");
    for (std::size_t i = 0; i < modulations.size(); ++i)
        for (std::size_t j = i + 1; j < modulations.size(); ++j)
            if (modulations[i] == modulations[j])
                throw ConfigError("duplicate modulation in sweep");
    if (snr_grid_db.empty()) throw ConfigError("empty SNR grid");
    for (double g : snr_grid_db)
        if (std::isnan(g) || g == -std::numeric_limits<double>::infinity())
            throw ConfigError("SNR grid values must be finite or +inf");
    for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
        if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
            throw ConfigError("SNR grid must be strictly increasing");
    if (min_bits < 10000) throw ConfigError("min_bits must be at least 10000");
    if (batch_bits == 0) throw ConfigError("batch_bits must be positive");
    if (workers < 0) throw ConfigError("workers must be non-negative");
    channel.validate();
    for (Modulation m : modulations) config_for(m).validate();
    const FHCodeMatrix resolved = resolved_codes();
    if (!validate_fh_codes(resolved, num_antennas, num_subpulses).empty())
        throw ConfigError("FH codes repeat across antennas within a sub-pulse");
}

WaveformConfig SweepSpec::config_for(Modulation m) const {
    WaveformConfig cfg;
    cfg.num_antennas = num_antennas;
    cfg.num_subpulses = num_subpulses;
    cfg.freq_step = freq_step;
    cfg.subpulse_duration = bit_duration * bits_per_symbol(m);
    cfg.pri = cfg.subpulse_duration * num_subpulses;  // gapless
    cfg.sample_rate = sample_rate;
    cfg.modulation = m;
    cfg.element_positions = element_positions;
    cfg.phase_ramp = phase_ramp;
    return cfg;
}

FHCodeMatrix SweepSpec::resolved_codes() const {
    if (codes.codes.empty()) return FHCodeMatrix::constant(num_antennas, num_subpulses, 10);
    if (codes.num_antennas != num_antennas || codes.num_subpulses != num_subpulses)
        throw ConfigError("FH code matrix shape does not match the sweep waveform");
    return codes;
}

double per_bit_snr_linear(const SweepSpec& spec, Modulation m, double snr_db) {
    const double gamma = db_to_linear(snr_db);
    if (spec.convention == SnrConvention::PerBit) return gamma;
    // Capture-power SNR -> per-bit: a capture sample carries the combined
    // power of all antennas, and the array also moves M bits per symbol slot.
    const WaveformConfig cfg = spec.config_for(m);
    return gamma * cfg.samples_per_bit() / spec.num_antennas;
}

BERReport run_ber_sweep(const SweepSpec& spec) {
    spec.validate();

    BERReport report;
    report.master_seed = spec.master_seed;
    report.config_hash = hex64(fnv1a(canonical_string(spec)));
    report.timestamp = iso8601_utc_now();
    report.convention = spec.convention;

    int workers = spec.workers;
    if (workers == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        workers = hw == 0 ? 1 : static_cast<int>(hw);
    }

    const FHCodeMatrix codes = spec.resolved_codes();
    std::uint64_t point_index = 0;
    for (Modulation m : spec.modulations) {
        const WaveformConfig cfg = spec.config_for(m);
        for (double snr_db : spec.snr_grid_db) {
            report.points.push_back(run_point(spec, cfg, codes, snr_db, point_index, workers));
            ++point_index;
        }
    }
    std::stable_sort(report.points.begin(), report.points.end(),
                     [](const BERPoint& a, const BERPoint& b) {
                         if (a.modulation != b.modulation)
                             return static_cast<int>(a.modulation) < static_cast<int>(b.modulation);
                         return a.snr_db < b.snr_db;
                     });
    return report;
}

}  // namespace fhmodem
