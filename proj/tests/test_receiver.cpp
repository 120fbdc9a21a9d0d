#include <cmath>
#include <vector>

#include "doctest.h"
#include "fhmodem/channel.hpp"
#include "fhmodem/receiver.hpp"
#include "fhmodem/rng.hpp"
#include "fhmodem/types.hpp"
#include "fhmodem/waveform.hpp"

using namespace fhmodem;

namespace {

const double kPi = kTwoPi / 2.0;

MatchedFilterOutput single_row(const std::vector<cplx>& ys) {
    MatchedFilterOutput y;
    y.num_pulses = 1;
    y.num_antennas = 1;
    y.num_subpulses = static_cast<int>(ys.size());
    y.samples_per_subpulse = 1;
    y.y = ys;
    return y;
}

IQBuffer noise_buffer(std::size_t n, double variance, std::uint64_t seed,
                      double rate = 20e6) {
    GaussianRng rng(seed);
    IQBuffer b;
    b.sample_rate = rate;
    b.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) b.samples.push_back(rng.complex_normal(variance));
    return b;
}

}  // namespace

TEST_CASE("dc bias removal") {
    IQBuffer zero_mean;
    zero_mean.sample_rate = 1.0;
    zero_mean.samples = {cplx{1, 0}, cplx{-1, 0}, cplx{0, 1}, cplx{0, -1}};
    SUBCASE("zero-mean input is unchanged") {
        IQBuffer out = remove_dc_bias(zero_mean);
        for (std::size_t k = 0; k < out.samples.size(); ++k)
            CHECK(std::abs(out.samples[k] - zero_mean.samples[k]) < 1e-15);
    }
    SUBCASE("constant input collapses to zero") {
        IQBuffer c;
        c.sample_rate = 1.0;
        c.samples.assign(9, cplx{0.4, -1.2});
        IQBuffer out = remove_dc_bias(c);
        for (const cplx& v : out.samples) CHECK(std::abs(v) < 1e-15);
    }
    SUBCASE("offset round trip") {
        IQBuffer shifted = zero_mean;
        for (cplx& v : shifted.samples) v += cplx{0.3, 0.1};
        IQBuffer out = remove_dc_bias(shifted);
        for (std::size_t k = 0; k < out.samples.size(); ++k)
            CHECK(std::abs(out.samples[k] - zero_mean.samples[k]) < 1e-12);
    }
    SUBCASE("empty buffer throws") {
        IQBuffer empty;
        CHECK_THROWS_AS(remove_dc_bias(empty), DomainError);
    }
}

TEST_CASE("iq imbalance correction") {
    IQBuffer in;
    in.sample_rate = 1.0;
    GaussianRng rng(5);
    for (int k = 0; k < 100; ++k) in.samples.push_back(rng.complex_normal(1.0));

    SUBCASE("identity parameters change nothing") {
        IQBuffer out = correct_iq_imbalance(in, 1.0, 0.0);
        for (std::size_t k = 0; k < in.samples.size(); ++k)
            CHECK(std::abs(out.samples[k] - in.samples[k]) < 1e-15);
    }
    SUBCASE("exact inverse of the imposed imbalance") {
        IQBuffer distorted = apply_iq_imbalance(in, 1.1, 0.05);
        IQBuffer out = correct_iq_imbalance(distorted, 1.1, 0.05);
        for (std::size_t k = 0; k < in.samples.size(); ++k)
            CHECK(std::abs(out.samples[k] - in.samples[k]) < 1e-12);
    }
    SUBCASE("pure-real signal with zero phase is untouched by any gain") {
        IQBuffer real_in;
        real_in.sample_rate = 1.0;
        real_in.samples = {cplx{1.5, 0.0}, cplx{-0.25, 0.0}, cplx{0.0, 0.0}};
        IQBuffer distorted = apply_iq_imbalance(real_in, 2.0, 0.0);
        for (std::size_t k = 0; k < real_in.samples.size(); ++k)
            CHECK(std::abs(distorted.samples[k] - real_in.samples[k]) < 1e-15);
        IQBuffer out = correct_iq_imbalance(real_in, 2.0, 0.0);
        for (std::size_t k = 0; k < real_in.samples.size(); ++k)
            CHECK(std::abs(out.samples[k] - real_in.samples[k]) < 1e-15);
    }
    SUBCASE("invalid parameters") {
        CHECK_THROWS_AS(correct_iq_imbalance(in, 0.0, 0.0), DomainError);
        CHECK_THROWS_AS(correct_iq_imbalance(in, 1.0, 1.6), DomainError);  // >= pi/2
    }
}

TEST_CASE("delay estimation") {
    WaveformConfig cfg = WaveformConfig::defaults(Modulation::DBPSK);
    FHCodeMatrix codes = FHCodeMatrix::constant(1, 21, 10);
    auto enc = encode_differential(random_bits(20, 8), cfg);
    IQBuffer ref = synthesize_pulse(cfg, codes, enc.frames[0])[0];

    SUBCASE("aligned input gives zero") { CHECK(estimate_delay(ref, ref) == 0); }
    SUBCASE("constructed shift is recovered exactly") {
        IQBuffer rx;
        rx.sample_rate = ref.sample_rate;
        rx.samples.assign(37, cplx{0.0, 0.0});
        rx.samples.insert(rx.samples.end(), ref.samples.begin(), ref.samples.end());
        CHECK(estimate_delay(rx, ref) == 37);
    }
    SUBCASE("reference longer than capture throws") {
        IQBuffer shorter;
        shorter.sample_rate = ref.sample_rate;
        shorter.samples.assign(10, cplx{1.0, 0.0});
        CHECK_THROWS_AS(estimate_delay(shorter, ref), DimensionError);
    }
    SUBCASE("monte carlo at 0 dB per-sample snr") {
        // delay 100 inside noise; 420-sample reference
        IQBuffer tx = ref;
        tx.samples.resize(ref.samples.size() + 30, cplx{0.0, 0.0});
        int hits = 0;
        const int trials = 1000;
        for (int t = 0; t < trials; ++t) {
            ChannelState state;
            state.delay = 100;
            state.noise_variance = 1.0;
            IQBuffer rx = apply_channel({tx}, state, derive_seed(2024, 0, t));
            if (estimate_delay(rx, ref) == 100) ++hits;
        }
        CHECK(hits >= 990);
    }
}

TEST_CASE("matched filter") {
    WaveformConfig cfg = WaveformConfig::defaults(Modulation::DBPSK);
    FHCodeMatrix codes = FHCodeMatrix::constant(1, 21, 10);

    SUBCASE("zero-phase pulse gives unit outputs") {
        PhaseFrame frame;
        frame.num_antennas = 1;
        frame.num_subpulses = 21;
        frame.phases.assign(21, 0.0);
        frame.differentials.assign(20, 0.0);
        IQBuffer rx = synthesize_pulse(cfg, codes, frame)[0];
        auto y = matched_filter(rx, codes, cfg, {0});
        for (int q = 0; q < 21; ++q) CHECK(std::abs(y.at(0, 0, q) - cplx{1.0, 0.0}) < 1e-12);
    }
    SUBCASE("quarter-turn phase shows up directly") {
        PhaseFrame frame;
        frame.num_antennas = 1;
        frame.num_subpulses = 21;
        frame.phases.assign(21, kPi / 2);
        frame.differentials.assign(20, 0.0);
        IQBuffer rx = synthesize_pulse(cfg, codes, frame)[0];
        auto y = matched_filter(rx, codes, cfg, {0});
        for (int q = 0; q < 21; ++q) CHECK(std::abs(y.at(0, 0, q) - cplx{0.0, 1.0}) < 1e-12);
    }
    SUBCASE("cross-antenna leakage vanishes for integer hop-duration product") {
        WaveformConfig two = cfg;
        two.num_antennas = 2;
        two.num_subpulses = 4;
        two.pri = two.subpulse_duration * 4;
        two.freq_step = 1e6;  // 1 MHz * 1 us = 1
        two.element_positions = {0.0, 0.5};
        FHCodeMatrix c2;
        c2.num_antennas = 2;
        c2.num_subpulses = 4;
        c2.codes = {3, 5, 3, 5, 4, 6, 4, 6};
        auto enc = encode_differential(random_bits(6, 3), two);
        auto tx = synthesize_pulse(two, c2, enc.frames[0]);
        // capture carries antenna 2 only; antenna 1's filters must reject it
        auto y = matched_filter(tx[1], c2, two, {0});
        for (int q = 0; q < 4; ++q) {
            CHECK(std::abs(y.at(0, 0, q)) < 1e-10);
            CHECK(std::abs(y.at(0, 1, q) -
                           std::polar(1.0, enc.frames[0].phase(1, q))) < 1e-12);
        }
    }
    SUBCASE("linearity") {
        IQBuffer x1 = noise_buffer(static_cast<std::size_t>(cfg.samples_per_pulse()), 1.0, 21);
        IQBuffer x2 = noise_buffer(static_cast<std::size_t>(cfg.samples_per_pulse()), 1.0, 22);
        const cplx a{0.7, -0.2}, b{-1.1, 0.4};
        IQBuffer mix;
        mix.sample_rate = x1.sample_rate;
        for (std::size_t k = 0; k < x1.samples.size(); ++k)
            mix.samples.push_back(a * x1.samples[k] + b * x2.samples[k]);
        auto ya = matched_filter(x1, codes, cfg, {0});
        auto yb = matched_filter(x2, codes, cfg, {0});
        auto ym = matched_filter(mix, codes, cfg, {0});
        for (int q = 0; q < 21; ++q)
            CHECK(std::abs(ym.at(0, 0, q) - (a * ya.at(0, 0, q) + b * yb.at(0, 0, q))) <
                  1e-12);
    }
    SUBCASE("window out of range throws") {
        IQBuffer rx = noise_buffer(100, 1.0, 2);
        CHECK_THROWS_AS(matched_filter(rx, codes, cfg, {0}), DimensionError);
    }
    SUBCASE("normalized noise variance is the sample variance over L") {
        // noise-only capture: filtered outputs should carry variance 1/L
        const int pulses = 200;
        IQBuffer rx = noise_buffer(
            static_cast<std::size_t>(pulses) * cfg.samples_per_pri(), 1.0, 77);
        std::vector<std::int64_t> offsets(pulses);
        for (int n = 0; n < pulses; ++n) offsets[n] = n * cfg.samples_per_pri();
        auto y = matched_filter(rx, codes, cfg, offsets);
        double power = 0.0;
        cplx mean{0.0, 0.0};
        for (const cplx& v : y.y) {
            power += std::norm(v);
            mean += v;
        }
        const double n = static_cast<double>(y.y.size());
        power /= n;
        const double expect = 1.0 / cfg.samples_per_subpulse();
        CHECK(std::abs(power - expect) < 3.0 * expect / std::sqrt(n));
        CHECK(std::abs(mean) / n < 3.0 * std::sqrt(expect / n));
    }
}

TEST_CASE("coherent phase baseline") {
    SUBCASE("plain angle with no channel") {
        auto y = single_row({cplx{0.0, 1.0}});
        auto phases = estimate_phases_coherent(y, 0.0, 0.0, {0.0});
        REQUIRE(phases.size() == 1);
        CHECK(phases[0] == doctest::Approx(kPi / 2));
    }
    SUBCASE("channel phase is subtracted") {
        auto y = single_row({std::polar(1.0, kPi / 2 + kPi / 4)});
        auto phases = estimate_phases_coherent(y, kPi / 4, 0.0, {0.0});
        CHECK(phases[0] == doctest::Approx(kPi / 2));
    }
    SUBCASE("steering phase is added back per antenna") {
        MatchedFilterOutput y;
        y.num_pulses = 1;
        y.num_antennas = 2;
        y.num_subpulses = 1;
        y.samples_per_subpulse = 1;
        y.y = {std::polar(1.0, kPi / 2), std::polar(1.0, kPi / 2 - kPi / 2)};
        auto phases = estimate_phases_coherent(y, 0.0, kPi / 6, {0.0, 0.5});
        CHECK(phases[0] == doctest::Approx(kPi / 2));
        CHECK(phases[1] == doctest::Approx(kPi / 2));
    }
}

TEST_CASE("differential decoding") {
    SUBCASE("binary quarter-turn maps to bit zero") {
        auto frame = decode_differential(single_row({cplx{1, 0}, cplx{0, 1}}),
                                         Modulation::DBPSK);
        REQUIRE(frame.bits.size() == 1);
        CHECK(frame.delta_hat[0] == doctest::Approx(kPi / 2));
        CHECK(frame.bits[0] == 0);
        CHECK(frame.erasure_count == 0);
    }
    SUBCASE("common complex factor cancels") {
        std::vector<cplx> row = {cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0.5, 0.5}};
        auto base = decode_differential(single_row(row), Modulation::DBPSK);
        const cplx factor = 3.7 * std::polar(1.0, 2.1);
        std::vector<cplx> scaled = row;
        for (cplx& v : scaled) v *= factor;
        auto rotated = decode_differential(single_row(scaled), Modulation::DBPSK);
        CHECK(rotated.bits == base.bits);
        CHECK(rotated.symbols == base.symbols);
        for (std::size_t k = 0; k < base.delta_hat.size(); ++k) {
            double d = std::abs(rotated.delta_hat[k] - base.delta_hat[k]);
            d = std::min(d, kTwoPi - d);
            CHECK(d < 1e-9);
        }
    }
    SUBCASE("noisy angle snaps to the nearest dictionary point") {
        auto frame = decode_differential(
            single_row({cplx{1, 0}, std::polar(1.0, 3 * kPi / 2 + 0.2)}), Modulation::DBPSK);
        CHECK(frame.symbols[0] == 1);
        CHECK(frame.bits[0] == 1);
    }
    SUBCASE("zero matched-filter sample is an erasure") {
        auto frame = decode_differential(single_row({cplx{1, 0}, cplx{0, 0}, cplx{0, 1}}),
                                         Modulation::DBPSK);
        CHECK(frame.erasure_count == 2);  // both pairs touch the zero
        CHECK(frame.erasures[0] == 1);
        CHECK(frame.erasures[1] == 1);
    }
    SUBCASE("conjugating the inputs mirrors the decisions") {
        for (Modulation mod : {Modulation::DBPSK, Modulation::DQPSK}) {
            const int levels = dictionary_size(mod);
            GaussianRng rng(13);
            std::vector<cplx> row(8);
            row[0] = {1.0, 0.0};
            for (std::size_t q = 1; q < row.size(); ++q)
                row[q] = row[q - 1] * std::polar(1.0, kTwoPi * (0.03 + rng.uniform() * 0.94));
            auto fwd = decode_differential(single_row(row), mod);
            std::vector<cplx> conj_row = row;
            for (cplx& v : conj_row) v = std::conj(v);
            auto rev = decode_differential(single_row(conj_row), mod);
            for (std::size_t k = 0; k < fwd.symbols.size(); ++k)
                CHECK(rev.symbols[k] == levels - 1 - fwd.symbols[k]);
        }
    }
    SUBCASE("needs at least two sub-pulses") {
        CHECK_THROWS_AS(decode_differential(single_row({cplx{1, 0}}), Modulation::DBPSK),
                        DimensionError);
    }
}

TEST_CASE("coherent baseline agrees with the differential decoder at zero noise") {
    WaveformConfig cfg = WaveformConfig::defaults(Modulation::DQPSK);
    FHCodeMatrix codes = FHCodeMatrix::constant(1, 21, 10);
    const auto bits = random_bits(static_cast<std::size_t>(cfg.bits_per_pulse()) * 2, 17);
    auto train = synthesize_train(cfg, codes, bits);

    ChannelState state;
    state.alpha_ch = std::polar(0.8, 1.234);
    state.theta_c = 0.35;
    IQBuffer rx = apply_channel(train.tx, state, 1);

    std::vector<std::int64_t> offsets = {0, cfg.samples_per_pri()};
    auto y = matched_filter(rx, codes, cfg, offsets);
    auto coherent = estimate_phases_coherent(y, std::arg(state.alpha_ch), state.theta_c,
                                             cfg.element_positions);
    auto decoded = decode_differential(y, cfg.modulation);

    for (std::size_t n = 0; n < train.frames.size(); ++n) {
        const PhaseFrame& f = train.frames[n];
        for (int q = 0; q < cfg.num_subpulses; ++q) {
            double d = std::abs(coherent[n * 21 + q] - f.phase(0, q));
            d = std::min(d, kTwoPi - d);
            CHECK(d < 1e-9);
        }
        for (int q = 0; q + 1 < cfg.num_subpulses; ++q) {
            const double delta =
                decoded.delta_hat[n * decoded.symbols_per_pulse() + q];
            double d = std::abs(delta - f.differential(0, q));
            d = std::min(d, kTwoPi - d);
            CHECK(d < 1e-9);
        }
    }
}

TEST_CASE("decoding is invariant to channel gain and arrival angle") {
    WaveformConfig cfg = WaveformConfig::defaults(Modulation::DBPSK);
    FHCodeMatrix codes = FHCodeMatrix::constant(1, 21, 10);
    const auto bits = random_bits(200, 23);
    auto train = synthesize_train(cfg, codes, bits);
    std::vector<std::int64_t> offsets;
    for (std::size_t n = 0; n < train.frames.size(); ++n)
        offsets.push_back(static_cast<std::int64_t>(n) * cfg.samples_per_pri());

    ChannelState base;
    auto baseline = decode_differential(
        matched_filter(apply_channel(train.tx, base, 1), codes, cfg, offsets), cfg.modulation);
    REQUIRE(baseline.erasure_count == 0);

    GaussianRng rng(31);
    for (int t = 0; t < 100; ++t) {
        ChannelState state;
        state.alpha_ch = std::polar(0.1 + 9.9 * rng.uniform(), kTwoPi * rng.uniform());
        state.theta_c = (rng.uniform() - 0.5) * 0.98 * kPi;
        auto decoded = decode_differential(
            matched_filter(apply_channel(train.tx, state, 1), codes, cfg, offsets),
            cfg.modulation);
        CHECK(decoded.bits == baseline.bits);
    }
}

TEST_CASE("capture pipeline") {
    WaveformConfig cfg = WaveformConfig::defaults(Modulation::DBPSK);
    FHCodeMatrix codes = FHCodeMatrix::constant(1, 21, 10);
    const auto bits = random_bits(1000, 99);
    auto train = synthesize_train(cfg, codes, bits);

    SUBCASE("loopback") {
        ChannelState state;
        IQBuffer rx = apply_channel(train.tx, state, 1);
        CaptureDiagnostics diag;
        auto decoded = decode_capture(rx, codes, cfg, 1.0, 0.0, -1, &diag);
        CHECK(diag.delay == 0);
        CHECK(diag.num_pulses == 50);
        REQUIRE(decoded.bits.size() >= bits.size());
        for (std::size_t k = 0; k < bits.size(); ++k) CHECK(decoded.bits[k] == bits[k]);
        CHECK(decoded.erasure_count == 0);
    }
    SUBCASE("delay and dc offset are undone") {
        ChannelState state;
        state.delay = 250;
        state.dc_offset = {0.2, 0.0};
        IQBuffer rx = apply_channel(train.tx, state, 1);
        CaptureDiagnostics diag;
        auto decoded = decode_capture(rx, codes, cfg, 1.0, 0.0, -1, &diag);
        CHECK(diag.delay == 250);
        for (std::size_t k = 0; k < bits.size(); ++k) CHECK(decoded.bits[k] == bits[k]);
    }
    SUBCASE("moderate noise still decodes cleanly") {
        ChannelState state;
        state.noise_variance = 0.1;  // 10 dB per sub-pulse sample
        IQBuffer rx = apply_channel(train.tx, state, 5);
        auto decoded = decode_capture(rx, codes, cfg);
        std::size_t errors = 0;
        for (std::size_t k = 0; k < bits.size(); ++k)
            if (decoded.bits[k] != bits[k]) ++errors;
        CHECK(static_cast<double>(errors) / static_cast<double>(bits.size()) < 1e-2);
    }
    SUBCASE("pure noise raises no-pulse-found") {
        // Long enough (>= 16 comb teeth) for the 5x-median test to be armed.
        IQBuffer rx = noise_buffer(static_cast<std::size_t>(24 * cfg.samples_per_pri()),
                                   1.0, 12345);
        CHECK_THROWS_AS(decode_capture(rx, codes, cfg), NoPulseFoundError);
    }
    SUBCASE("short captures decode without the median test") {
        const auto few_bits = random_bits(40, 7);  // two pulses
        auto short_train = synthesize_train(cfg, codes, few_bits);
        IQBuffer rx = apply_channel(short_train.tx, ChannelState{}, 1);
        CaptureDiagnostics diag;
        auto decoded = decode_capture(rx, codes, cfg, 1.0, 0.0, -1, &diag);
        CHECK(diag.delay == 0);
        CHECK(diag.num_pulses == 2);
        for (std::size_t k = 0; k < few_bits.size(); ++k)
            CHECK(decoded.bits[k] == few_bits[k]);
    }
}
