#ifndef OMSIM_TYPES_HPP
#define OMSIM_TYPES_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace omsim {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// All rates and frequencies are stored internally as angular frequencies
// (rad/s). User-facing I/O is in ordinary frequency (Hz); the conversion
// happens exactly once, at parse/serialize time.
inline double hz_to_rad(double hz) { return two_pi * hz; }
inline double rad_to_hz(double rad) { return rad / two_pi; }
inline double deg_to_rad(double deg) { return deg * (two_pi / 360.0); }
inline double rad_to_deg(double rad) { return rad * (360.0 / two_pi); }

// Phase folded into [0, 2pi) for reporting.
inline double wrap_phase(double phi) {
    double p = std::fmod(phi, two_pi);
    if (p < 0) p += two_pi;
    return p;
}

// Electromechanical device: single mechanical mode coupled to a single
// cavity mode, cavity loss entirely external.
struct OpmDevice {
    double omega_m = 0;  // mechanical angular frequency
    double gamma = 0;    // intrinsic mechanical damping rate
    double kappa = 0;    // cavity total linewidth
    double omega_c = 0;  // cavity angular frequency
    double g0 = 0;       // vacuum optomechanical coupling
};

// Returns the list of violated invariants; empty means the device is valid.
std::vector<std::string> validate_device(const OpmDevice& dev);

// Throwing variant used by the pipeline entry points.
void require_valid(const OpmDevice& dev);

struct ProbeTone {
    double detuning = 0;  // Delta = omega_p - omega_c
    double coupling = 0;  // effective coupling G
    std::optional<double> photon_number;  // n_c, consistent with G = g0 sqrt(n_c)
};

// G = g0 sqrt(n_c)
double effective_coupling(double g0, double n_c);

// Inverse map, n_c = (G/g0)^2.
double photon_number_for(double g0, double G);

// Checks G = g0 sqrt(n_c) to machine precision when photon_number is set.
std::vector<std::string> validate_probe(const ProbeTone& probe, const OpmDevice& dev);

// Phase-shift-and-gain filter A[w] = A0 exp(-i phi w / omega_m).
struct FeedbackFilter {
    double gain = 0;   // A0
    double phase = 0;  // phi at w = omega_m
};

// Hardware feedback chain: modulated tone at detuning_f, reduced to a
// filter-level (A0, phi) by feedback_chain_reduce().
struct FeedbackChain {
    double detuning_f = 0;        // Delta_f
    double carrier_amplitude = 0; // alpha_0 (absolute scale only enters via alpha_0^2 * G_el)
    double electronic_gain = 0;   // script-G, includes mixer conversion
    double loop_delay = 0;        // tau (s)
    double line_phase_plus = 0;   // extra propagation phase on the upper sideband
    double line_phase_minus = 0;  // extra propagation phase on the lower sideband
};

struct NoiseBudget {
    double bath_occupation = 0;    // n_m^T
    double amplifier_noise = 0;    // n_add
    double cavity_occupation = 0;  // n_c^T, cavity assumed in its ground state by default
};

std::vector<std::string> validate_noise(const NoiseBudget& noise);

// Classical oscillator for the dimensional reference spectra.
struct ClassicalOscillator {
    double mass = 0;           // kg
    double temperature = 0;    // K
    double boltzmann = 1.380649e-23;  // J/K
    double position_scale = 0; // x_zpf, m
};

std::vector<std::string> validate_oscillator(const ClassicalOscillator& osc);

}  // namespace omsim

#endif
