#include "omsim/types.hpp"

#include <cmath>

namespace omsim {

std::vector<std::string> validate_device(const OpmDevice& dev) {
    std::vector<std::string> errs;
    if (!(dev.omega_m > 0)) errs.push_back("omega_m must be positive");
    if (!(dev.gamma > 0)) errs.push_back("gamma must be positive");
    if (!(dev.kappa > 0)) errs.push_back("kappa must be positive");
    if (!(dev.omega_c > 0)) errs.push_back("omega_c must be positive");
    if (!(dev.g0 > 0)) errs.push_back("g0 must be positive");
    if (dev.gamma > 0 && dev.omega_m > 0 && !(dev.gamma < dev.omega_m / 10.0))
        errs.push_back("gamma < omega_m/10 violated");
    return errs;
}

void require_valid(const OpmDevice& dev) {
    auto errs = validate_device(dev);
    if (!errs.empty()) {
        std::string msg = "invalid device:";
        for (const auto& e : errs) msg += " " + e + ";";
        throw std::invalid_argument(msg);
    }
}

double effective_coupling(double g0, double n_c) {
    if (!(g0 > 0)) throw std::invalid_argument("g0 must be positive");
    if (n_c < 0) throw std::invalid_argument("photon number must be non-negative");
    return g0 * std::sqrt(n_c);
}

double photon_number_for(double g0, double G) {
    if (!(g0 > 0)) throw std::invalid_argument("g0 must be positive");
    double r = G / g0;
    return r * r;
}

std::vector<std::string> validate_probe(const ProbeTone& probe, const OpmDevice& dev) {
    std::vector<std::string> errs;
    if (probe.coupling < 0) errs.push_back("coupling G must be non-negative");
    if (probe.photon_number) {
        if (*probe.photon_number < 0) {
            errs.push_back("photon_number must be non-negative");
        } else {
            double g = effective_coupling(dev.g0, *probe.photon_number);
            double scale = std::max(probe.coupling, dev.g0);
            if (std::abs(g - probe.coupling) > 1e-12 * scale)
                errs.push_back("photon_number inconsistent with coupling: G != g0*sqrt(n_c)");
        }
    }
    return errs;
}

std::vector<std::string> validate_noise(const NoiseBudget& noise) {
    std::vector<std::string> errs;
    if (noise.bath_occupation < 0) errs.push_back("bath_occupation must be non-negative");
    if (noise.amplifier_noise < 0) errs.push_back("amplifier_noise must be non-negative");
    if (noise.cavity_occupation < 0) errs.push_back("cavity_occupation must be non-negative");
    return errs;
}

std::vector<std::string> validate_oscillator(const ClassicalOscillator& osc) {
    std::vector<std::string> errs;
    if (!(osc.mass > 0)) errs.push_back("mass must be positive");
    if (!(osc.temperature > 0)) errs.push_back("temperature must be positive");
    if (!(osc.position_scale > 0)) errs.push_back("position_scale must be positive");
    return errs;
}

}  // namespace omsim
