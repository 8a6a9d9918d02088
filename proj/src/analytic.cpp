#include "omsim/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace omsim::analytic {

double classical_spectrum(double omega, const ClassicalOscillator& osc,
                          double omega_m, double gamma, double fb_gain) {
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
    if (fb_gain < 0) throw std::invalid_argument("feedback gain must be non-negative");
    double d = omega_m * omega_m - omega * omega;
    double broadened = gamma * (1.0 + fb_gain);
    double den = d * d + broadened * broadened * omega * omega;
    return 2.0 * osc.boltzmann * osc.temperature * gamma / (osc.mass * den);
}

double optimal_phase(double kappa, double omega_m) {
    if (!(kappa > 0) || !(omega_m > 0))
        throw std::invalid_argument("kappa and omega_m must be positive");
    return std::atan(-kappa / (2.0 * omega_m)) + two_pi / 2.0;
}

double optimal_phase_blue_sideband(double kappa, double omega_m) {
    // maximizes (k^2 + 8 w^2) sin(phi) - 2 k w cos(phi)
    double s = kappa * kappa + 8.0 * omega_m * omega_m;
    double c = 2.0 * kappa * omega_m;
    return std::atan2(s, -c);
}

EffectiveParams effective_params_resonant(const OpmDevice& dev, double G,
                                          const FeedbackFilter& filter) {
    double k = dev.kappa, w = dev.omega_m;
    double den = k * k + 4.0 * w * w;
    double cs = std::cos(filter.phase), sn = std::sin(filter.phase);
    EffectiveParams p;
    p.omega_eff = w + 2.0 * G * filter.gain * (k * cs + 2.0 * w * sn) / den;
    p.gamma_eff = dev.gamma + 4.0 * G * filter.gain * (k * sn - 2.0 * w * cs) / den;
    return p;
}

double gamma_fb(double G, double A0, double kappa, double omega_m) {
    return 4.0 * G * A0 / std::sqrt(kappa * kappa + 4.0 * omega_m * omega_m);
}

OccupationBreakdown occupation_resonant(const OpmDevice& dev, double G,
                                        const FeedbackFilter& filter,
                                        const NoiseBudget& noise,
                                        std::vector<std::string>* warnings) {
    double phi_m = optimal_phase(dev.kappa, dev.omega_m);
    if (std::abs(wrap_phase(filter.phase) - phi_m) > 1e-9 && warnings)
        warnings->push_back("occupation closed forms hold at the optimal phase; "
                            "using gamma_eff at the requested phase");
    EffectiveParams eff = effective_params_resonant(dev, G, filter);
    if (!(eff.gamma_eff > 0))
        throw std::runtime_error("unstable configuration: occupation undefined (gamma_eff <= 0)");

    double k = dev.kappa, w = dev.omega_m;
    OccupationBreakdown b;
    b.n_thermal = dev.gamma / eff.gamma_eff * (noise.bath_occupation + 0.5);
    b.cooperativity = 4.0 * G * G / (k * eff.gamma_eff);
    b.n_backaction = b.cooperativity * k * k / (k * k + 4.0 * w * w);
    b.n_feedback = filter.gain * filter.gain * (noise.amplifier_noise + 0.5) /
                   (2.0 * k * eff.gamma_eff);
    b.n_total = b.n_thermal + b.n_backaction + b.n_feedback - 0.5;
    return b;
}

OperatingPoint optimal_operating_point(const OpmDevice& dev, const NoiseBudget& noise,
                                       double G) {
    if (!(G > 0)) throw std::invalid_argument("G must be positive");
    double k = dev.kappa, w = dev.omega_m;
    double root = std::sqrt(1.0 + 2.0 * noise.amplifier_noise);
    OperatingPoint p;
    p.gain_opt = 4.0 * G * k / (root * std::sqrt(k * k + 4.0 * w * w));
    p.n_m_min = 0.5 * root - 0.5;
    return p;
}

BlueSidebandRates blue_sideband_rates(const OpmDevice& dev, double G,
                                      const FeedbackFilter& filter) {
    double k = dev.kappa, w = dev.omega_m;
    BlueSidebandRates r;
    double ratio = k / (4.0 * w);
    r.gamma_opt = (4.0 * G * G / k) / (1.0 + ratio * ratio);
    double cs = std::cos(filter.phase), sn = std::sin(filter.phase);
    double fb = 4.0 * G * filter.gain *
                ((k * k + 8.0 * w * w) * sn - 2.0 * k * w * cs) /
                (k * k * k + 16.0 * k * w * w);
    r.gamma_eff = dev.gamma - r.gamma_opt + fb;
    return r;
}

double gamma_fb_bsb(double G, double A0, double kappa, double omega_m) {
    double k2 = kappa * kappa, w2 = omega_m * omega_m;
    double num = std::sqrt(k2 * k2 + 20.0 * k2 * w2 + 64.0 * w2 * w2);
    return 4.0 * A0 * G * num / (kappa * k2 + 16.0 * kappa * w2);
}

double displacement_spectrum_resonant(double omega, const OpmDevice& dev, double G,
                                      double A0, const NoiseBudget& noise,
                                      const EffectiveParams& eff) {
    double w = omega, wm = dev.omega_m, k = dev.kappa;
    double d = eff.omega_eff * eff.omega_eff - w * w;
    double chi2 = 1.0 / (d * d + eff.gamma_eff * eff.gamma_eff * w * w);
    double s_ff = 2.0 * dev.gamma * wm * wm * (noise.bath_occupation + 0.5);
    double s_ba = 2.0 * wm * wm * G * G * k / (k * k / 4.0 + w * w);
    double s_inj = A0 * A0 * wm * wm / k * (noise.amplifier_noise + 0.5);
    return chi2 * (s_ff + s_ba + s_inj);
}

double squashing_dip(double omega, const OpmDevice& dev, double G, double A0,
                     const NoiseBudget& noise, double gamma_eff) {
    // two equal negative Lorentzians, depth set by the re-measured amplifier
    // noise interfering with its in-loop copy
    double wm = dev.omega_m, h = gamma_eff / 2.0;
    double coeff = G * A0 * gamma_eff * noise.amplifier_noise / dev.kappa;
    double dp = (omega - wm) * (omega - wm) + h * h;
    double dm = (omega + wm) * (omega + wm) + h * h;
    return -coeff / dp - coeff / dm;
}

double sideband_asymmetry_term(double omega, const OpmDevice& dev, double G,
                               double gamma_eff) {
    // antisymmetric zero-point contribution, +Lorentzian at +omega_m and
    // -Lorentzian at -omega_m
    double wm = dev.omega_m, h = gamma_eff / 2.0;
    double coeff = 2.0 * G * G * gamma_eff / dev.kappa;
    double dp = (omega - wm) * (omega - wm) + h * h;
    double dm = (omega + wm) * (omega + wm) + h * h;
    return coeff / dp - coeff / dm;
}

double squashed_spectrum_badcavity(double omega, const OpmDevice& dev, double G,
                                   double A0, const NoiseBudget& noise,
                                   double gamma_eff,
                                   const std::function<double(double)>& s_x) {
    double out = noise.amplifier_noise + 0.5;
    out += 8.0 * G * G / dev.kappa * s_x(omega);
    out += sideband_asymmetry_term(omega, dev, G, gamma_eff);
    out += squashing_dip(omega, dev, G, A0, noise, gamma_eff);
    return out;
}

ChainReduction feedback_chain_reduce(const OpmDevice& dev, const FeedbackChain& chain,
                                     std::vector<std::string>* warnings) {
    double k = dev.kappa, wm = dev.omega_m, df = chain.detuning_f;
    if (warnings) {
        if (!(std::abs(df) > 2.0 * wm))
            warnings->push_back("|Delta_f| <= 2*omega_m: stray feedback sidebands "
                                "overlap the measurement band");
        if (chain.loop_delay * dev.gamma > 0.01)
            warnings->push_back("loop delay not small against the decoherence time; "
                                "pure-phase-shift reduction degrades");
    }

    double phi0 = std::atan2(2.0 * wm, k);
    double phi1 = std::atan2(2.0 * df, k);
    double phip = std::atan2(2.0 * (df + wm), k);
    double phim = std::atan2(2.0 * (df - wm), k);
    double phitau = wm * chain.loop_delay;
    double quarter = two_pi / 4.0;

    ChainReduction r;
    r.phi_tilde = phitau + phip - phi1 - quarter + chain.line_phase_plus;
    r.phi_tilde_prime = phitau - phim + phi1 + quarter + chain.line_phase_minus;
    r.amp_upper = k / std::sqrt(k * k / 4.0 + (df + wm) * (df + wm));
    r.amp_lower = k / std::sqrt(k * k / 4.0 + (df - wm) * (df - wm));

    double a = r.amp_upper, b = r.amp_lower;
    double d2 = a * a + b * b + 2.0 * a * b * std::cos(r.phi_tilde - r.phi_tilde_prime);
    r.interference = std::sqrt(std::max(d2, 0.0));
    if (r.interference < 1e-9 * (a + b))
        throw std::runtime_error("feedback force vanishes: destructive sideband interference (D = 0)");

    double sy = a * std::sin(r.phi_tilde) + b * std::sin(r.phi_tilde_prime);
    double cy = a * std::cos(r.phi_tilde) + b * std::cos(r.phi_tilde_prime);
    r.phase = wrap_phase(phi0 + std::atan2(sy, cy));
    r.gain = dev.g0 * std::sqrt(k) * chain.carrier_amplitude * chain.carrier_amplitude *
             chain.electronic_gain * r.interference /
             std::sqrt(k * k / 4.0 + df * df);
    return r;
}

}  // namespace omsim::analytic
