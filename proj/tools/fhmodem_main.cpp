// Command-line front end: generate / impair / decode / sweep / snr.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fhmodem/io.hpp"
#include "fhmodem/metrics.hpp"
#include "fhmodem/receiver.hpp"
#include "fhmodem/rng.hpp"
#include "fhmodem/sweep.hpp"
#include "fhmodem/types.hpp"
#include "fhmodem/waveform.hpp"

namespace {

using namespace fhmodem;

// "cap.iq" -> "cap.ant2.iq" for multi-antenna transmit captures.
std::string antenna_path(const std::string& base, int antenna, int num_antennas) {
    if (num_antennas == 1) return base;
    const auto slash = base.find_last_of("/\\");
    const auto dot = base.find_last_of('.');
    const std::string tag = ".ant" + std::to_string(antenna);
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return base + tag;
    return base.substr(0, dot) + tag + base.substr(dot);
}

std::vector<double> parse_positions(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw FormatError("empty entry in position list '" + text + "'");
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw FormatError("empty position list");
    return out;
}

WaveformConfig config_from_option(const std::string& path) {
    if (path.empty()) {
        WaveformConfig cfg = WaveformConfig::defaults(Modulation::DBPSK);
        cfg.validate();
        return cfg;
    }
    return load_waveform_config(path);
}

FHCodeMatrix codes_from_option(const std::string& path, const WaveformConfig& cfg) {
    if (path.empty()) return FHCodeMatrix::constant(cfg.num_antennas, cfg.num_subpulses, 10);
    return load_fh_codes_from_config(path, cfg);
}

std::vector<std::uint8_t> bits_from_option(const std::string& arg, std::uint64_t seed) {
    const std::string prefix = "random:";
    if (arg.rfind(prefix, 0) == 0) {
        const std::string count = arg.substr(prefix.size());
        std::uint64_t n = 0;
        try {
            n = std::stoull(count);
        } catch (const std::exception&) {
            throw FormatError("bad bit count in '" + arg + "'");
        }
        if (n == 0) throw FormatError("random bit count must be positive");
        return random_bits(n, seed);
    }
    return read_bits_file(arg);
}

int cmd_generate(const std::string& config_path, const std::string& bits_arg,
                 const std::string& out_path, std::uint64_t seed) {
    const WaveformConfig cfg = config_from_option(config_path);
    const FHCodeMatrix codes = codes_from_option(config_path, cfg);
    const std::vector<std::uint8_t> bits = bits_from_option(bits_arg, seed);

    const TrainSynthesis train = synthesize_train(cfg, codes, bits);
    for (int m = 0; m < cfg.num_antennas; ++m)
        write_iq_auto(train.tx[m], antenna_path(out_path, m, cfg.num_antennas));
    write_bits_file(bits, out_path + ".bits");

    std::cout << "wrote " << out_path << ": antennas=" << cfg.num_antennas
              << " pulses=" << train.frames.size() << " samples=" << train.tx[0].samples.size()
              << " bits=" << bits.size() << " pad_bits=" << train.pad_bits << "\n";
    return 0;
}

int cmd_impair(const std::vector<std::string>& in_paths, const std::string& out_path,
               const std::string& alpha_str, double theta, double snr_db, bool have_snr,
               double noise_var, std::int64_t delay, const std::string& dc_str, double iq_gain,
               double iq_phase, std::uint64_t seed, const std::string& positions_str,
               std::int64_t pulse_stride, const std::string& fading_str) {
    std::vector<IQBuffer> tx;
    tx.reserve(in_paths.size());
    for (const std::string& p : in_paths) tx.push_back(read_iq_auto(p));

    ChannelState state;
    state.alpha_ch = parse_complex(alpha_str);
    state.theta_c = theta;
    state.delay = delay;
    state.dc_offset = parse_complex(dc_str);
    state.iq_gain = iq_gain;
    state.iq_phase = iq_phase;
    if (fading_str == "rayleigh-block")
        state.fading = FadingMode::RayleighBlock;
    else if (fading_str != "fixed")
        throw ConfigError("fading must be 'fixed' or 'rayleigh-block'");

    std::vector<double> positions;
    if (!positions_str.empty())
        positions = parse_positions(positions_str);
    else if (tx.size() == 1)
        positions = {0.0};
    else
        throw ConfigError("multi-antenna impair needs --positions");

    if (have_snr) {
        // Noise sized against the combined noiseless signal power so the
        // capture hits the requested per-sample SNR.
        ChannelState clean = state;
        clean.noise_variance = 0.0;
        clean.delay = 0;
        clean.dc_offset = {0.0, 0.0};
        clean.iq_gain = 1.0;
        clean.iq_phase = 0.0;
        const IQBuffer combined = apply_channel(tx, clean, seed, pulse_stride, positions);
        double power = 0.0;
        for (const cplx& s : combined.samples) power += std::norm(s);
        if (combined.samples.empty() || power == 0.0)
            throw DomainError("cannot calibrate SNR on an all-zero capture");
        power /= static_cast<double>(combined.samples.size());
        state.noise_variance = calibrate_noise_for_snr(power, db_to_linear(snr_db));
    } else {
        state.noise_variance = noise_var;
    }

    const IQBuffer rx = apply_channel(tx, state, seed, pulse_stride, positions);
    write_iq_auto(rx, out_path);
    std::cout << "wrote " << out_path << ": samples=" << rx.samples.size()
              << " noise_variance=" << state.noise_variance << "\n";
    return 0;
}

int cmd_decode(const std::string& config_path, const std::string& in_path,
               const std::string& out_bits, const std::string& truth_path, double iq_gain,
               double iq_phase, std::int64_t max_lag) {
    const WaveformConfig cfg = config_from_option(config_path);
    const FHCodeMatrix codes = codes_from_option(config_path, cfg);
    const IQBuffer rx = read_iq_auto(in_path);
    if (rx.sample_rate > 0.0 && std::abs(rx.sample_rate - cfg.sample_rate) > 1e-6)
        throw ConfigError("capture sample rate " + std::to_string(rx.sample_rate) +
                          " does not match config " + std::to_string(cfg.sample_rate));

    CaptureDiagnostics diag;
    const DecodedFrame decoded = decode_capture(rx, codes, cfg, iq_gain, iq_phase, max_lag, &diag);
    write_bits_file(decoded.bits, out_bits);
    std::cout << "delay=" << diag.delay << " pulses=" << diag.num_pulses
              << " erasures=" << decoded.erasure_count << "\n";

    if (!truth_path.empty()) {
        const std::vector<std::uint8_t> truth = read_bits_file(truth_path);
        if (truth.size() > decoded.bits.size())
            throw DimensionError("truth has " + std::to_string(truth.size()) +
                                 " bits but only " + std::to_string(decoded.bits.size()) +
                                 " were decoded");
        const int bps = bits_per_symbol(cfg.modulation);
        std::uint64_t errors = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const std::size_t symbol = i / bps;
            if (decoded.erasures[symbol] || decoded.bits[i] != truth[i]) ++errors;
        }
        const double ber = truth.empty() ? 0.0
                                         : static_cast<double>(errors) /
                                               static_cast<double>(truth.size());
        std::cout << "ber=" << ber << " errors=" << errors << " bits=" << truth.size() << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_path, int workers_override) {
    SweepSpec spec = load_sweep_spec(spec_path);
    if (workers_override >= 0) spec.workers = workers_override;
    const BERReport report = run_ber_sweep(spec);
    write_ber_csv(report, out_path);
    std::cout << "config_hash=" << report.config_hash << " seed=" << report.master_seed
              << " timestamp=" << report.timestamp << " points=" << report.points.size()
              << " out=" << out_path << "\n";
    return 0;
}

int cmd_snr(const std::string& noisy_path, const std::string& noise_path) {
    const IQBuffer noisy = read_iq_auto(noisy_path);
    const IQBuffer noise = read_iq_auto(noise_path);
    const SnrEstimate est = estimate_snr(noisy, noise);
    std::cout << "snr_linear=" << est.snr_linear
              << " snr_db=" << (est.snr_linear > 0.0 ? linear_to_db(est.snr_linear)
                                                     : -std::numeric_limits<double>::infinity());
    if (est.negative) std::cout << " negative_estimate=1";
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-hopped PSK baseband modem and Monte Carlo BER toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Synthesize a transmit IQ capture");
    std::string gen_config, gen_bits = "random:1000", gen_out;
    std::uint64_t gen_seed = 1;
    gen->add_option("--config", gen_config, "waveform config JSON (defaults when omitted)");
    gen->add_option("--bits", gen_bits, "bit source: 0/1 text file or random:N")->required();
    gen->add_option("--out", gen_out,
                    "output IQ path (.csv for CSV, else binary; .antN inserted when M>1)")
        ->required();
    gen->add_option("--seed", gen_seed, "seed for random:N bit generation");

    // impair
    auto* imp = app.add_subcommand("impair", "Pass transmit captures through the channel");
    std::vector<std::string> imp_in;
    std::string imp_out, imp_alpha = "1", imp_dc = "0", imp_positions, imp_fading = "fixed";
    double imp_theta = 0.0, imp_snr = 0.0, imp_noise_var = 0.0, imp_gain = 1.0, imp_phase = 0.0;
    std::int64_t imp_delay = 0, imp_stride = 0;
    std::uint64_t imp_seed = 1;
    imp->add_option("--in", imp_in, "input IQ capture (repeat per transmit antenna)")
        ->required();
    imp->add_option("--out", imp_out, "output IQ path")->required();
    auto* imp_snr_opt = imp->add_option("--snr-db", imp_snr,
                                        "per-sample SNR target; noise sized from signal power");
    auto* imp_nv_opt =
        imp->add_option("--noise-var", imp_noise_var, "explicit complex noise variance");
    imp_snr_opt->excludes(imp_nv_opt);
    imp_nv_opt->excludes(imp_snr_opt);
    imp->add_option("--alpha", imp_alpha, "channel gain, a+bj");
    imp->add_option("--theta", imp_theta, "arrival angle, radians");
    imp->add_option("--delay", imp_delay, "integer sample delay")->check(CLI::NonNegativeNumber);
    imp->add_option("--dc", imp_dc, "DC offset, a+bj");
    imp->add_option("--iq-gain", imp_gain, "IQ imbalance gain");
    imp->add_option("--iq-phase", imp_phase, "IQ imbalance phase, radians");
    imp->add_option("--seed", imp_seed, "noise/fading seed");
    imp->add_option("--positions", imp_positions,
                    "antenna positions in wavelengths, comma list (required for M>1)");
    imp->add_option("--pulse-stride", imp_stride,
                    "samples per fading block for rayleigh-block fading");
    imp->add_option("--fading", imp_fading, "fixed | rayleigh-block");

    // decode
    auto* dec = app.add_subcommand("decode", "Recover bits from a received capture");
    std::string dec_config, dec_in, dec_out, dec_truth;
    double dec_gain = 1.0, dec_phase = 0.0;
    std::int64_t dec_max_lag = -1;
    dec->add_option("--config", dec_config, "waveform config JSON (defaults when omitted)");
    dec->add_option("--in", dec_in, "received IQ capture")->required();
    dec->add_option("--out-bits", dec_out, "decoded bits output file")->required();
    dec->add_option("--truth", dec_truth, "ground-truth bits; prints BER when given");
    dec->add_option("--iq-gain", dec_gain, "known IQ imbalance gain to undo");
    dec->add_option("--iq-phase", dec_phase, "known IQ imbalance phase to undo");
    dec->add_option("--max-lag", dec_max_lag, "delay search limit in samples (-1: 8 PRIs)");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Run a Monte Carlo BER sweep");
    std::string swp_spec, swp_out;
    int swp_workers = -1;
    swp->add_option("--spec", swp_spec, "sweep spec JSON")->required();
    swp->add_option("--out", swp_out, "output CSV path")->required();
    swp->add_option("--workers", swp_workers, "override worker count (0: hardware)");

    // snr
    auto* snr = app.add_subcommand("snr", "Estimate SNR from signal and noise captures");
    std::string snr_noisy, snr_noise;
    snr->add_option("--noisy", snr_noisy, "signal-plus-noise IQ capture")->required();
    snr->add_option("--noise", snr_noise, "noise-only IQ capture")->required();

    try {
        app.parse(argc, argv);
        if (*gen) return cmd_generate(gen_config, gen_bits, gen_out, gen_seed);
        if (*imp)
            return cmd_impair(imp_in, imp_out, imp_alpha, imp_theta, imp_snr,
                              imp_snr_opt->count() > 0, imp_noise_var, imp_delay, imp_dc,
                              imp_gain, imp_phase, imp_seed, imp_positions, imp_stride,
                              imp_fading);
        if (*dec)
            return cmd_decode(dec_config, dec_in, dec_out, dec_truth, dec_gain, dec_phase,
                              dec_max_lag);
        if (*swp) return cmd_sweep(swp_spec, swp_out, swp_workers);
        if (*snr) return cmd_snr(snr_noisy, snr_noise);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const CLI::Success& e) {
        return app.exit(e);  // --help and friends
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        const int code = e.get_exit_code();
        return code == 0 ? 1 : code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
