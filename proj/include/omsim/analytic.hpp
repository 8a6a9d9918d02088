#ifndef OMSIM_ANALYTIC_HPP
#define OMSIM_ANALYTIC_HPP

#include <complex>
#include <functional>
#include <vector>

#include "omsim/types.hpp"

// Closed-form results for the feedback-cooled optomechanical loop. These
// serve both as fast evaluation paths and as independent oracles for the
// frequency-domain solver.
namespace omsim::analytic {

struct EffectiveParams {
    double omega_eff = 0;
    double gamma_eff = 0;
    bool stable() const { return gamma_eff > 0; }
};

struct OccupationBreakdown {
    double n_thermal = 0;     // residual thermal + zero-point occupation
    double n_backaction = 0;  // quantum backaction of the measurement
    double n_feedback = 0;    // injected measurement noise fed back
    double n_total = 0;       // n_thermal + n_backaction + n_feedback - 1/2
    double cooperativity = 0; // 4 G^2 / (kappa gamma_eff)
};

// Classical position spectrum of a cold-damped oscillator, m^2/(rad/s).
// fb_gain = 0 recovers the free thermal spectrum.
double classical_spectrum(double omega, const ClassicalOscillator& osc,
                          double omega_m, double gamma, double fb_gain);

// Feedback phase maximizing the induced damping under resonant probing,
// in (pi/2, pi).
double optimal_phase(double kappa, double omega_m);

// Feedback phase maximizing the induced damping under blue-sideband probing.
double optimal_phase_blue_sideband(double kappa, double omega_m);

// Effective mechanical frequency and damping under resonant probing
// (high-Q expansion, exact to O(gamma/omega_m)).
EffectiveParams effective_params_resonant(const OpmDevice& dev, double G,
                                          const FeedbackFilter& filter);

// Feedback-induced damping at the optimal phase.
double gamma_fb(double G, double A0, double kappa, double omega_m);

// Occupation budget under resonant probing at the optimal feedback phase.
// The closed forms hold at phi = phi_m; off-optimum a warning is recorded
// and the result is the optimal-phase budget evaluated with the
// phase-dependent gamma_eff.
OccupationBreakdown occupation_resonant(const OpmDevice& dev, double G,
                                        const FeedbackFilter& filter,
                                        const NoiseBudget& noise,
                                        std::vector<std::string>* warnings = nullptr);

struct OperatingPoint {
    double gain_opt = 0;   // A0 at the backaction/injection balance
    double n_m_min = 0;    // occupation floor at that gain
};

// Gain balancing backaction against injected noise, and the resulting
// occupation floor (1/2)sqrt(1+2 n_add) - 1/2.
OperatingPoint optimal_operating_point(const OpmDevice& dev, const NoiseBudget& noise,
                                       double G);

struct BlueSidebandRates {
    double gamma_opt = 0;  // dynamical-backaction anti-damping
    double gamma_eff = 0;  // net damping including feedback (may be negative)
};

// Anti-damping and net damping for probing at Delta = omega_m.
BlueSidebandRates blue_sideband_rates(const OpmDevice& dev, double G,
                                      const FeedbackFilter& filter);

// Feedback damping term of the blue-sideband configuration at the optimal
// phase, 4 A0 G sqrt(k^4 + 20 k^2 w^2 + 64 w^4) / (k^3 + 16 k w^2).
double gamma_fb_bsb(double G, double A0, double kappa, double omega_m);

// Closed-form displacement spectrum for resonant probing (quanta*s),
// the Delta = 0 solution with thermal, backaction and fed-back noise terms.
double displacement_spectrum_resonant(double omega, const OpmDevice& dev, double G,
                                      double A0, const NoiseBudget& noise,
                                      const EffectiveParams& eff);

// In-loop heterodyne spectrum in the unresolved-sideband regime at
// phi = pi/2: sideband term 8G^2/kappa * S_x plus the zero-point
// asymmetry term and two equal squashing dips, over the flat background
// n_add + 1/2. S_x is supplied by the caller (closed form or numeric).
double squashed_spectrum_badcavity(double omega, const OpmDevice& dev, double G,
                                   double A0, const NoiseBudget& noise,
                                   double gamma_eff,
                                   const std::function<double(double)>& s_x);

// The antisymmetric zero-point sideband term and the symmetric squashing
// dip, exposed separately for the sideband-symmetry checks.
double squashing_dip(double omega, const OpmDevice& dev, double G, double A0,
                     const NoiseBudget& noise, double gamma_eff);
double sideband_asymmetry_term(double omega, const OpmDevice& dev, double G,
                               double gamma_eff);

struct ChainReduction {
    double gain = 0;          // filter-level A0
    double phase = 0;         // filter-level phi (includes phi_0)
    double interference = 0;  // D, sideband interference factor
    double amp_upper = 0;     // A, upper-sideband amplitude factor
    double amp_lower = 0;     // B, lower-sideband amplitude factor
    double phi_tilde = 0;     // upper-sideband phase contribution
    double phi_tilde_prime = 0;  // lower-sideband phase contribution
};

// Reduces the triplet-modulation hardware chain to the filter-level
// (A0, phi). Throws std::runtime_error on exact destructive interference
// (D = 0).
ChainReduction feedback_chain_reduce(const OpmDevice& dev, const FeedbackChain& chain,
                                     std::vector<std::string>* warnings = nullptr);

}  // namespace omsim::analytic

#endif
