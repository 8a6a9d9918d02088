#include "omsim/config.hpp"

#include "omsim/analytic.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace omsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_number(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid number '" + v + "' at line " + std::to_string(line), line);
    }
}

const std::map<std::string, std::set<std::string>> known_keys = {
    {"device", {"omega_m_hz", "gamma_hz", "kappa_hz", "omega_c_hz", "g0_hz"}},
    {"probe", {"detuning_hz", "coupling_hz", "photon_number"}},
    {"feedback",
     {"gain_hz", "phase_deg", "chain_detuning_hz", "chain_carrier_amplitude",
      "chain_electronic_gain", "chain_loop_delay_s", "chain_line_phase_plus_deg",
      "chain_line_phase_minus_deg"}},
    {"noise", {"bath_occupation", "amplifier_noise", "cavity_occupation"}},
    {"grid", {"span_linewidths", "points_per_linewidth", "background_points", "max_offset_hz"}},
};

}  // namespace

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    std::map<std::string, std::map<std::string, double>> values;
    std::map<std::string, int> value_lines;

    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("malformed section header at line " + std::to_string(lineno),
                                  lineno);
            section = trim(t.substr(1, t.size() - 2));
            if (!known_keys.count(section))
                throw ConfigError("unknown section [" + section + "] at line " +
                                      std::to_string(lineno),
                                  lineno);
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno), lineno);
        if (section.empty())
            throw ConfigError("key outside any section at line " + std::to_string(lineno), lineno);
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (!known_keys.at(section).count(key))
            throw ConfigError("unknown key '" + key + "' in [" + section + "] at line " +
                                  std::to_string(lineno),
                              lineno);
        if (values[section].count(key))
            throw ConfigError("duplicate key '" + key + "' at line " + std::to_string(lineno),
                              lineno);
        values[section][key] = to_number(val, lineno);
        value_lines[section + "." + key] = lineno;
    }

    auto need = [&](const std::string& sec, const std::string& key) {
        auto s = values.find(sec);
        if (s == values.end() || !s->second.count(key))
            throw ConfigError("missing required key '" + key + "' in [" + sec + "]", 0);
        return s->second.at(key);
    };
    auto opt = [&](const std::string& sec, const std::string& key, double dflt) {
        auto s = values.find(sec);
        if (s == values.end() || !s->second.count(key)) return dflt;
        return s->second.at(key);
    };
    auto has = [&](const std::string& sec, const std::string& key) {
        auto s = values.find(sec);
        return s != values.end() && s->second.count(key) > 0;
    };

    cfg.device.omega_m = hz_to_rad(need("device", "omega_m_hz"));
    cfg.device.gamma = hz_to_rad(need("device", "gamma_hz"));
    cfg.device.kappa = hz_to_rad(need("device", "kappa_hz"));
    cfg.device.omega_c = hz_to_rad(need("device", "omega_c_hz"));
    cfg.device.g0 = hz_to_rad(need("device", "g0_hz"));

    cfg.probe.detuning = hz_to_rad(need("probe", "detuning_hz"));
    cfg.probe.coupling = hz_to_rad(need("probe", "coupling_hz"));
    if (has("probe", "photon_number"))
        cfg.probe.photon_number = opt("probe", "photon_number", 0);

    cfg.filter.gain = hz_to_rad(need("feedback", "gain_hz"));
    cfg.filter.phase = deg_to_rad(need("feedback", "phase_deg"));
    if (has("feedback", "chain_detuning_hz")) {
        FeedbackChain ch;
        ch.detuning_f = hz_to_rad(need("feedback", "chain_detuning_hz"));
        ch.carrier_amplitude = opt("feedback", "chain_carrier_amplitude", 1.0);
        ch.electronic_gain = opt("feedback", "chain_electronic_gain", 1.0);
        ch.loop_delay = opt("feedback", "chain_loop_delay_s", 0.0);
        ch.line_phase_plus = deg_to_rad(opt("feedback", "chain_line_phase_plus_deg", 0.0));
        ch.line_phase_minus = deg_to_rad(opt("feedback", "chain_line_phase_minus_deg", 0.0));
        cfg.chain = ch;
    }

    cfg.noise.bath_occupation = need("noise", "bath_occupation");
    cfg.noise.amplifier_noise = need("noise", "amplifier_noise");
    cfg.noise.cavity_occupation = opt("noise", "cavity_occupation", 0.0);

    cfg.grid.span_linewidths = opt("grid", "span_linewidths", cfg.grid.span_linewidths);
    cfg.grid.points_per_linewidth =
        opt("grid", "points_per_linewidth", cfg.grid.points_per_linewidth);
    cfg.grid.background_points = static_cast<std::size_t>(
        opt("grid", "background_points", static_cast<double>(cfg.grid.background_points)));
    cfg.grid.max_offset = hz_to_rad(opt("grid", "max_offset_hz", rad_to_hz(cfg.grid.max_offset)));

    return cfg;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

std::string serialize_config(const Config& cfg) {
    std::ostringstream o;
    o << "[device]\n";
    o << "omega_m_hz = " << num(rad_to_hz(cfg.device.omega_m)) << "\n";
    o << "gamma_hz = " << num(rad_to_hz(cfg.device.gamma)) << "\n";
    o << "kappa_hz = " << num(rad_to_hz(cfg.device.kappa)) << "\n";
    o << "omega_c_hz = " << num(rad_to_hz(cfg.device.omega_c)) << "\n";
    o << "g0_hz = " << num(rad_to_hz(cfg.device.g0)) << "\n";
    o << "\n[probe]\n";
    o << "detuning_hz = " << num(rad_to_hz(cfg.probe.detuning)) << "\n";
    o << "coupling_hz = " << num(rad_to_hz(cfg.probe.coupling)) << "\n";
    if (cfg.probe.photon_number)
        o << "photon_number = " << num(*cfg.probe.photon_number) << "\n";
    o << "\n[feedback]\n";
    o << "gain_hz = " << num(rad_to_hz(cfg.filter.gain)) << "\n";
    o << "phase_deg = " << num(rad_to_deg(cfg.filter.phase)) << "\n";
    if (cfg.chain) {
        o << "chain_detuning_hz = " << num(rad_to_hz(cfg.chain->detuning_f)) << "\n";
        o << "chain_carrier_amplitude = " << num(cfg.chain->carrier_amplitude) << "\n";
        o << "chain_electronic_gain = " << num(cfg.chain->electronic_gain) << "\n";
        o << "chain_loop_delay_s = " << num(cfg.chain->loop_delay) << "\n";
        o << "chain_line_phase_plus_deg = " << num(rad_to_deg(cfg.chain->line_phase_plus)) << "\n";
        o << "chain_line_phase_minus_deg = " << num(rad_to_deg(cfg.chain->line_phase_minus))
          << "\n";
    }
    o << "\n[noise]\n";
    o << "bath_occupation = " << num(cfg.noise.bath_occupation) << "\n";
    o << "amplifier_noise = " << num(cfg.noise.amplifier_noise) << "\n";
    o << "cavity_occupation = " << num(cfg.noise.cavity_occupation) << "\n";
    o << "\n[grid]\n";
    o << "span_linewidths = " << num(cfg.grid.span_linewidths) << "\n";
    o << "points_per_linewidth = " << num(cfg.grid.points_per_linewidth) << "\n";
    o << "background_points = " << num(static_cast<double>(cfg.grid.background_points)) << "\n";
    o << "max_offset_hz = " << num(rad_to_hz(cfg.grid.max_offset)) << "\n";
    return o.str();
}

Config reference_defaults() {
    Config cfg;
    cfg.device.omega_m = hz_to_rad(8.14e6);
    cfg.device.gamma = hz_to_rad(76.0);
    cfg.device.kappa = hz_to_rad(8.5e6);
    cfg.device.omega_c = hz_to_rad(5.35e9);
    cfg.device.g0 = hz_to_rad(130.0);
    cfg.probe.detuning = 0;
    cfg.probe.coupling = hz_to_rad(427e3);
    cfg.filter.gain = 0;
    cfg.filter.phase = analytic::optimal_phase(cfg.device.kappa, cfg.device.omega_m);
    cfg.noise.bath_occupation = 205.0;
    cfg.noise.amplifier_noise = 13.0;
    cfg.noise.cavity_occupation = 0.0;
    return cfg;
}

}  // namespace omsim
