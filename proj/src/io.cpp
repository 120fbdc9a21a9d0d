#include "fhmodem/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fhmodem {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw FormatError(path + ": " + what);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(path, "cannot open for writing");
    f << text;
    if (!f) fail(path, "write failed");
}

// Shortest decimal that parses back to the same double.
std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void put_f32_le(std::string& out, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>((u >> 16) & 0xff));
    out.push_back(static_cast<char>((u >> 24) & 0xff));
}

float get_f32_le(const unsigned char* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

void write_sidecar(const std::string& path, double sample_rate, std::size_t num_samples) {
    json j;
    j["sample_rate_hz"] = sample_rate;
    j["num_samples"] = num_samples;
    write_text(path + ".json", j.dump(2) + "\n");
}

// Sidecar reads are lenient about extra keys (unlike config files) so old
// tools keep reading captures written by newer ones.
double read_sidecar(const std::string& path, std::size_t num_samples) {
    const std::string sidecar = path + ".json";
    std::ifstream f(sidecar);
    if (!f) fail(sidecar, "missing IQ sidecar");
    try {
        const json j = json::parse(f);
        if (!j.contains("sample_rate_hz") || !j["sample_rate_hz"].is_number())
            fail(sidecar, "sample_rate_hz missing or not a number");
        const double rate = j["sample_rate_hz"].get<double>();
        if (!(rate > 0.0)) fail(sidecar, "sample_rate_hz must be positive");
        if (j.contains("num_samples") && j["num_samples"].get<std::uint64_t>() != num_samples)
            fail(path, "payload length disagrees with sidecar num_samples");
        return rate;
    } catch (const json::exception& e) {
        fail(sidecar, e.what());
    }
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

double parse_double_strict(const std::string& text, const std::string& context) {
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+') ++first;  // from_chars rejects a leading '+'
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (first == last || res.ec != std::errc{} || res.ptr != last)
        throw FormatError(context + ": bad number '" + text + "'");
    return v;
}

void check_keys(const json& j, const std::initializer_list<const char*>& allowed,
                const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

cplx json_complex(const json& j, const std::string& context) {
    if (j.is_string()) return parse_complex(j.get<std::string>());
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_number()) return {j.get<double>(), 0.0};
    throw ConfigError(context + ": expected \"a+bj\", [re, im], or a number");
}

FHCodeMatrix json_codes(const json& j, int antennas, int subpulses, const std::string& context) {
    FHCodeMatrix codes;
    codes.num_antennas = antennas;
    codes.num_subpulses = subpulses;
    if (!j.is_array() || j.size() != static_cast<std::size_t>(antennas))
        throw ConfigError(context + ": fh_codes must be an array of " +
                          std::to_string(antennas) + " rows");
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(subpulses))
            throw ConfigError(context + ": each fh_codes row needs " +
                              std::to_string(subpulses) + " entries");
        for (const auto& v : row) {
            if (!v.is_number_integer()) throw ConfigError(context + ": codes must be integers");
            codes.codes.push_back(v.get<int>());
        }
    }
    return codes;
}

PhaseRamp parse_phase_ramp(const std::string& name) {
    if (name == "subpulse-local") return PhaseRamp::SubpulseLocal;
    if (name == "pulse-global") return PhaseRamp::PulseGlobal;
    throw ConfigError("phase_ramp must be 'subpulse-local' or 'pulse-global', got '" + name + "'");
}

FadingMode parse_fading(const std::string& name) {
    if (name == "fixed") return FadingMode::Fixed;
    if (name == "rayleigh-block") return FadingMode::RayleighBlock;
    throw ConfigError("fading must be 'fixed' or 'rayleigh-block', got '" + name + "'");
}

json parse_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open");
    try {
        return json::parse(f, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

void write_iq_file(const IQBuffer& buffer, const std::string& path) {
    std::string payload;
    payload.reserve(buffer.samples.size() * 8);
    for (const cplx& s : buffer.samples) {
        put_f32_le(payload, static_cast<float>(s.real()));
        put_f32_le(payload, static_cast<float>(s.imag()));
    }
    write_text(path, payload);
    write_sidecar(path, buffer.sample_rate, buffer.samples.size());
}

IQBuffer read_iq_file(const std::string& path) {
    const std::string payload = read_text(path);
    if (payload.size() % 8 != 0)
        fail(path, "payload is not a whole number of I/Q float32 pairs");
    const std::size_t n = payload.size() / 8;
    IQBuffer out;
    out.samples.resize(n);
    const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
    for (std::size_t k = 0; k < n; ++k) {
        const float i = get_f32_le(p + 8 * k);
        const float q = get_f32_le(p + 8 * k + 4);
        if (!std::isfinite(i) || !std::isfinite(q)) fail(path, "non-finite sample");
        out.samples[k] = {static_cast<double>(i), static_cast<double>(q)};
    }
    out.sample_rate = read_sidecar(path, n);
    return out;
}

void write_iq_csv(const IQBuffer& buffer, const std::string& path) {
    std::string text = "index,i,q\n";
    for (std::size_t k = 0; k < buffer.samples.size(); ++k) {
        text += std::to_string(k);
        text += ',';
        text += format_double(buffer.samples[k].real());
        text += ',';
        text += format_double(buffer.samples[k].imag());
        text += '\n';
    }
    write_text(path, text);
    write_sidecar(path, buffer.sample_rate, buffer.samples.size());
}

IQBuffer read_iq_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || (line != "index,i,q" && line != "index,i,q\r"))
        fail(path, "expected header 'index,i,q'");
    IQBuffer out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) fail(path, "bad row '" + line + "'");
        const double i = parse_double_strict(line.substr(c1 + 1, c2 - c1 - 1), path);
        const double q = parse_double_strict(line.substr(c2 + 1), path);
        if (!std::isfinite(i) || !std::isfinite(q)) fail(path, "non-finite sample");
        out.samples.emplace_back(i, q);
    }
    out.sample_rate = read_sidecar(path, out.samples.size());
    return out;
}

void write_iq_auto(const IQBuffer& buffer, const std::string& path) {
    if (ends_with(path, ".csv"))
        write_iq_csv(buffer, path);
    else
        write_iq_file(buffer, path);
}

IQBuffer read_iq_auto(const std::string& path) {
    return ends_with(path, ".csv") ? read_iq_csv(path) : read_iq_file(path);
}

void write_bits_file(const std::vector<std::uint8_t>& bits, const std::string& path) {
    std::string text;
    text.reserve(bits.size() + 1);
    for (std::uint8_t b : bits) text.push_back(b ? '1' : '0');
    text.push_back('\n');
    write_text(path, text);
}

std::vector<std::uint8_t> read_bits_file(const std::string& path) {
    const std::string text = read_text(path);
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
        if (c == '0')
            bits.push_back(0);
        else if (c == '1')
            bits.push_back(1);
        else if (!std::isspace(static_cast<unsigned char>(c)))
            fail(path, std::string("unexpected character '") + c + "' in bit file");
    }
    return bits;
}

void write_ber_csv(const BERReport& report, const std::string& path) {
    std::string text = "modulation,snr_db,snr_convention,bits,errors,ber,stderr,oracle_ber\n";
    for (const BERPoint& p : report.points) {
        text += modulation_name(p.modulation);
        text += ',';
        text += format_double(p.snr_db);
        text += ',';
        text += snr_convention_name(p.convention);
        text += ',';
        text += std::to_string(p.bits_sent);
        text += ',';
        text += std::to_string(p.bit_errors);
        text += ',';
        text += format_double(p.ber);
        text += ',';
        text += format_double(p.std_error);
        text += ',';
        if (p.oracle_ber) text += format_double(*p.oracle_ber);
        text += '\n';
    }
    write_text(path, text);
}

cplx parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw FormatError("empty complex literal");

    // Split at the sign that starts the second term, if any: a '+'/'-' that is
    // neither the leading sign nor part of an exponent.
    std::size_t split = std::string::npos;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E')
            split = k;  // keep the last candidate: handles "1e-3-4e-2j"
    }

    auto parse_term = [&](std::string term, bool* imag) -> double {
        *imag = false;
        if (!term.empty() && (term.back() == 'j' || term.back() == 'J')) {
            *imag = true;
            term.pop_back();
            if (term.empty() || term == "+") return 1.0;
            if (term == "-") return -1.0;
        }
        return parse_double_strict(term, "complex literal '" + text + "'");
    };

    bool first_imag = false, second_imag = false;
    if (split == std::string::npos) {
        const double v = parse_term(s, &first_imag);
        return first_imag ? cplx{0.0, v} : cplx{v, 0.0};
    }
    const double a = parse_term(s.substr(0, split), &first_imag);
    const double b = parse_term(s.substr(split), &second_imag);
    if (first_imag == second_imag)
        throw FormatError("complex literal '" + text + "' needs one real and one imaginary term");
    return first_imag ? cplx{b, a} : cplx{a, b};
}

Modulation parse_modulation(const std::string& name) {
    std::string k;
    for (char c : name)
        if (c != '-' && c != '_')
            k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (k == "dbpsk") return Modulation::DBPSK;
    if (k == "dqpsk") return Modulation::DQPSK;
    throw ConfigError("unknown modulation '" + name + "' (want D-BPSK or D-QPSK)");
}

SnrConvention parse_snr_convention(const std::string& name) {
    if (name == "per-bit") return SnrConvention::PerBit;
    if (name == "per-subpulse-sample") return SnrConvention::PerSubpulseSample;
    throw ConfigError("unknown snr_convention '" + name +
                      "' (want per-bit or per-subpulse-sample)");
}

namespace {

// Shared by the standalone waveform config and the sweep's waveform block;
// in sweep mode the duration key is bit_duration_s and pri/modulation are
// derived instead of configured.
void apply_waveform_keys(const json& j, const std::string& context, bool sweep_mode,
                         WaveformConfig* cfg, double* bit_duration, json* codes_json,
                         int* constant_code) {
    std::vector<const char*> allowed = {"num_antennas",   "num_subpulses",
                                        "freq_step_hz",   "sample_rate_hz",
                                        "modulation",     "element_positions_wavelengths",
                                        "phase_ramp",     "fh_code",
                                        "fh_codes"};
    if (sweep_mode)
        allowed.push_back("bit_duration_s");
    else {
        allowed.push_back("subpulse_duration_s");
        allowed.push_back("pri_s");
    }
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return it.key() == k; }) == allowed.end())
            throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
    if (sweep_mode && j.contains("modulation"))
        throw ConfigError(context + ": use the top-level 'modulations' list");

    if (j.contains("num_antennas")) cfg->num_antennas = j["num_antennas"].get<int>();
    if (j.contains("num_subpulses")) cfg->num_subpulses = j["num_subpulses"].get<int>();
    if (j.contains("freq_step_hz")) cfg->freq_step = j["freq_step_hz"].get<double>();
    if (j.contains("sample_rate_hz")) cfg->sample_rate = j["sample_rate_hz"].get<double>();
    if (j.contains("modulation"))
        cfg->modulation = parse_modulation(j["modulation"].get<std::string>());
    if (j.contains("element_positions_wavelengths")) {
        cfg->element_positions.clear();
        for (const auto& v : j["element_positions_wavelengths"])
            cfg->element_positions.push_back(v.get<double>());
    }
    if (j.contains("phase_ramp"))
        cfg->phase_ramp = parse_phase_ramp(j["phase_ramp"].get<std::string>());

    if (sweep_mode) {
        if (j.contains("bit_duration_s")) *bit_duration = j["bit_duration_s"].get<double>();
    } else {
        if (j.contains("subpulse_duration_s"))
            cfg->subpulse_duration = j["subpulse_duration_s"].get<double>();
        // Default PRI keeps the capture gapless unless overridden.
        cfg->pri = j.contains("pri_s") ? j["pri_s"].get<double>()
                                       : cfg->subpulse_duration * cfg->num_subpulses;
    }

    if (j.contains("fh_code") && j.contains("fh_codes"))
        throw ConfigError(context + ": give fh_code or fh_codes, not both");
    if (j.contains("fh_code")) *constant_code = j["fh_code"].get<int>();
    if (j.contains("fh_codes")) *codes_json = j["fh_codes"];
}

}  // namespace

WaveformConfig load_waveform_config(const std::string& path) {
    const json j = parse_json_file(path);
    try {
        // Seed the defaults from the modulation first so an unadorned D-QPSK
        // config gets the doubled sub-pulse duration.
        Modulation m = Modulation::DBPSK;
        if (j.is_object() && j.contains("modulation") && j["modulation"].is_string())
            m = parse_modulation(j["modulation"].get<std::string>());
        WaveformConfig cfg = WaveformConfig::defaults(m);
        double unused_bit_duration = 0.0;
        json codes_json;
        int constant_code = -1;
        apply_waveform_keys(j, path, /*sweep_mode=*/false, &cfg, &unused_bit_duration,
                            &codes_json, &constant_code);
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

FHCodeMatrix load_fh_codes_from_config(const std::string& path, const WaveformConfig& cfg) {
    const json j = parse_json_file(path);
    try {
        if (j.is_object() && j.contains("fh_codes"))
            return json_codes(j["fh_codes"], cfg.num_antennas, cfg.num_subpulses, path);
        const int value =
            j.is_object() && j.contains("fh_code") ? j["fh_code"].get<int>() : 10;
        return FHCodeMatrix::constant(cfg.num_antennas, cfg.num_subpulses, value);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

SweepSpec parse_sweep_spec_json(const json& j, const std::string& path) {
    check_keys(j,
               {"waveform", "modulations", "snr_grid_db", "snr_convention", "min_bits",
                "max_errors", "batch_bits", "seed", "workers", "channel"},
               path);

    SweepSpec spec;
    if (j.contains("waveform")) {
        WaveformConfig cfg;  // scratch carrier for the shared keys
        cfg.num_antennas = spec.num_antennas;
        cfg.num_subpulses = spec.num_subpulses;
        cfg.freq_step = spec.freq_step;
        cfg.sample_rate = spec.sample_rate;
        cfg.element_positions = spec.element_positions;
        cfg.phase_ramp = spec.phase_ramp;
        json codes_json;
        int constant_code = -1;
        apply_waveform_keys(j["waveform"], path + ": waveform", /*sweep_mode=*/true, &cfg,
                            &spec.bit_duration, &codes_json, &constant_code);
        spec.num_antennas = cfg.num_antennas;
        spec.num_subpulses = cfg.num_subpulses;
        spec.freq_step = cfg.freq_step;
        spec.sample_rate = cfg.sample_rate;
        spec.element_positions = cfg.element_positions;
        spec.phase_ramp = cfg.phase_ramp;
        if (!codes_json.is_null())
            spec.codes = json_codes(codes_json, spec.num_antennas, spec.num_subpulses, path);
        else if (constant_code >= 0)
            spec.codes =
                FHCodeMatrix::constant(spec.num_antennas, spec.num_subpulses, constant_code);
    }

    if (j.contains("modulations")) {
        spec.modulations.clear();
        for (const auto& v : j["modulations"])
            spec.modulations.push_back(parse_modulation(v.get<std::string>()));
    }
    if (j.contains("snr_grid_db")) {
        spec.snr_grid_db.clear();
        for (const auto& v : j["snr_grid_db"]) spec.snr_grid_db.push_back(v.get<double>());
    }
    if (j.contains("snr_convention"))
        spec.convention = parse_snr_convention(j["snr_convention"].get<std::string>());
    if (j.contains("min_bits")) spec.min_bits = j["min_bits"].get<std::uint64_t>();
    if (j.contains("max_errors")) spec.max_errors = j["max_errors"].get<std::uint64_t>();
    if (j.contains("batch_bits")) spec.batch_bits = j["batch_bits"].get<std::uint64_t>();
    if (j.contains("seed")) spec.master_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) spec.workers = j["workers"].get<int>();

    if (j.contains("channel")) {
        const json& c = j["channel"];
        check_keys(c, {"alpha", "theta_rad", "delay_samples", "dc_offset", "iq_gain", "iq_phase",
                       "fading"},
                   path + ": channel");
        if (c.contains("alpha")) spec.channel.alpha_ch = json_complex(c["alpha"], path);
        if (c.contains("theta_rad")) spec.channel.theta_c = c["theta_rad"].get<double>();
        if (c.contains("delay_samples"))
            spec.channel.delay = c["delay_samples"].get<std::int64_t>();
        if (c.contains("dc_offset")) spec.channel.dc_offset = json_complex(c["dc_offset"], path);
        if (c.contains("iq_gain")) spec.channel.iq_gain = c["iq_gain"].get<double>();
        if (c.contains("iq_phase")) spec.channel.iq_phase = c["iq_phase"].get<double>();
        if (c.contains("fading"))
            spec.channel.fading = parse_fading(c["fading"].get<std::string>());
    }
    return spec;
}

}  // namespace

SweepSpec load_sweep_spec(const std::string& path) {
    const json j = parse_json_file(path);
    try {
        return parse_sweep_spec_json(j, path);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace fhmodem
