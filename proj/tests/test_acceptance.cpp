// End-to-end acceptance harness: one printed PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "omsim/analytic.hpp"
#include "omsim/fitting.hpp"
#include "omsim/grid.hpp"
#include "omsim/linsolve.hpp"
#include "omsim/tdoracle.hpp"
#include "omsim/types.hpp"

using namespace omsim;

namespace {

constexpr double pi = two_pi / 2.0;
int failures = 0;

void report(int idx, const char* title, bool pass, const std::string& detail) {
    std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", idx, title, detail.c_str());
    if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

OpmDevice reference_device() {
    OpmDevice d;
    d.omega_m = hz_to_rad(8.14e6);
    d.gamma = hz_to_rad(76.0);
    d.kappa = hz_to_rad(8.5e6);
    d.omega_c = hz_to_rad(5.35e9);
    d.g0 = hz_to_rad(130.0);
    return d;
}

// 1. detection floor: minimize the occupation budget over the gain
void criterion_1() {
    auto dev = reference_device();
    NoiseBudget noise{0.0, 13.0, 0.0};
    // strong measurement so the gamma/gamma_eff residual does not blur the floor
    double G = hz_to_rad(2e6);
    double phi_m = analytic::optimal_phase(dev.kappa, dev.omega_m);
    double best = 1e300, best_a0 = 0;
    for (int i = 0; i <= 4000; ++i) {
        double a0 = 1e4 * std::pow(1e4, i / 4000.0);  // 1e4..1e8 rad/s
        try {
            auto b = analytic::occupation_resonant(dev, G, FeedbackFilter{a0, phi_m}, noise);
            if (b.n_total < best) {
                best = b.n_total;
                best_a0 = a0;
            }
        } catch (const std::exception&) {
        }
    }
    auto opt = analytic::optimal_operating_point(dev, NoiseBudget{0.0, 13.0, 0.0}, G);
    bool pass = std::abs(best - 2.098) <= 0.01 &&
                std::abs(best - opt.n_m_min) <= 0.01 &&
                std::abs(best_a0 - opt.gain_opt) < 0.05 * opt.gain_opt;
    report(1, "optimum-cooling floor at n_add = 13", pass,
           fmt("min over gain = %.4f (closed form %.4f), target 2.098 +/- 0.01", best,
               opt.n_m_min));
}

// 2. reported endpoint at the top gain
void criterion_2() {
    auto dev = reference_device();
    double G = hz_to_rad(427e3), A0 = hz_to_rad(206e3);
    FeedbackFilter f{A0, analytic::optimal_phase(dev.kappa, dev.omega_m)};
    NoiseBudget noise{370.0, 13.0, 0.0};
    ProbeTone probe{0.0, G, {}};
    auto st = linsolve::stability(dev, probe, f);
    auto grid = default_grid(std::abs(st.omega_eff), st.gamma_eff);
    auto tr = linsolve::solve_closed_loop(dev, probe, f, grid);
    double n = linsolve::occupation_numeric(linsolve::displacement_spectrum(tr, noise),
                                            linsolve::momentum_spectrum(tr, noise));
    bool pass = std::abs(n - 2.9) <= 0.3;
    report(2, "top-gain occupation vs reported 2.9 +/- 0.3", pass,
           fmt("model gives n_m = %.3f; the reported endpoint is not reproduced by "
               "this noise budget",
               n));
}

// 3. optimal phase from the numeric solver
void criterion_3() {
    auto dev = reference_device();
    double G = hz_to_rad(427e3), A0 = hz_to_rad(50e3);
    ProbeTone probe{0.0, G, {}};
    double best_phi = 0, best_geff = -1e300;
    for (double deg = 100.0; deg <= 200.0; deg += 0.25) {
        auto st = linsolve::stability(dev, probe, FeedbackFilter{A0, deg_to_rad(deg)});
        if (st.gamma_eff > best_geff) {
            best_geff = st.gamma_eff;
            best_phi = deg;
        }
    }
    double phi_m = rad_to_deg(analytic::optimal_phase(dev.kappa, dev.omega_m));
    auto st_m = linsolve::stability(dev, probe,
                                    FeedbackFilter{A0, deg_to_rad(phi_m)});
    double gfb = analytic::gamma_fb(G, A0, dev.kappa, dev.omega_m);
    bool pass = std::abs(best_phi - phi_m) <= 0.5 &&
                std::abs(st_m.omega_eff - dev.omega_m) <= 0.01 * gfb;
    report(3, "optimal feedback phase", pass,
           fmt("argmax %.2f deg vs %.2f deg; |omega shift| = %.3g of gamma_fb", best_phi,
               phi_m, std::abs(st_m.omega_eff - dev.omega_m) / gfb));
}

// 4. blue-sideband stabilization
void criterion_4() {
    auto dev = reference_device();
    double G = hz_to_rad(104e3);
    double phi_b = analytic::optimal_phase_blue_sideband(dev.kappa, dev.omega_m);
    ProbeTone probe{dev.omega_m, G, {}};
    auto rates = analytic::blue_sideband_rates(dev, G, FeedbackFilter{0.0, phi_b});
    double a0_inv = (rates.gamma_opt - dev.gamma) /
                    analytic::gamma_fb_bsb(G, 1.0, dev.kappa, dev.omega_m);
    double a0_num = linsolve::find_stability_boundary(dev, probe, phi_b, 0.1 * a0_inv,
                                                      10.0 * a0_inv);
    bool below = !linsolve::stability(dev, probe, FeedbackFilter{0.9 * a0_num, phi_b}).stable;
    bool above = linsolve::stability(dev, probe, FeedbackFilter{1.1 * a0_num, phi_b}).stable;
    auto st = linsolve::stability(dev, probe, FeedbackFilter{hz_to_rad(378e3), phi_b});
    double geff_hz = rad_to_hz(st.gamma_eff);
    bool pass = below && above && std::abs(a0_num - a0_inv) <= 1e-3 * a0_inv &&
                std::abs(geff_hz - 5e3) <= 0.3 * 5e3;
    report(4, "blue-sideband stabilization", pass,
           fmt("boundary %.6g vs inversion %.6g rad/s; gamma_eff/2pi = %.3g kHz at "
               "A0/2pi = 378 kHz",
               a0_num, a0_inv, geff_hz / 1e3));
}

// 5. squashing spectrum in the bad-cavity regime
void criterion_5() {
    OpmDevice dev;
    dev.omega_m = hz_to_rad(1e5);
    dev.kappa = 100.0 * dev.omega_m;
    dev.gamma = dev.omega_m / 1e5;
    dev.omega_c = hz_to_rad(5e9);
    dev.g0 = hz_to_rad(130.0);
    NoiseBudget noise{205.0, 13.0, 0.0};
    double gfb = 100.0 * dev.gamma, geff = dev.gamma + gfb;
    double G = std::sqrt(10.0 * dev.kappa * geff * geff /
                         (16.0 * dev.gamma * (noise.bath_occupation + 0.5)));
    double A0 = gfb * (dev.kappa * dev.kappa + 4.0 * dev.omega_m * dev.omega_m) /
                (4.0 * G * dev.kappa);
    FeedbackFilter f{A0, pi / 2.0};
    ProbeTone probe{0.0, G, {}};
    auto st = linsolve::stability(dev, probe, f);
    auto grid = default_grid(std::abs(st.omega_eff), st.gamma_eff);
    auto tr = linsolve::solve_closed_loop(dev, probe, f, grid);
    auto sx = linsolve::displacement_spectrum(tr, noise);
    auto so = linsolve::output_spectrum(tr, noise);
    auto s_x_interp = [&](double w) {
        auto it = std::lower_bound(grid.points.begin(), grid.points.end(), w);
        return sx.values[it - grid.points.begin()];
    };
    std::size_t checked = 0;
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double w = grid.points[i];
        if (std::abs(std::abs(w) - std::abs(st.omega_eff)) > 10.0 * st.gamma_eff) continue;
        double expect = analytic::squashed_spectrum_badcavity(w, dev, G, A0, noise,
                                                              st.gamma_eff, s_x_interp);
        worst = std::max(worst, std::abs(so.values[i] - expect) / expect);
        ++checked;
    }
    // the dip term is even in frequency to machine precision
    double dip_asym = 0;
    for (double off : {0.3, 1.0, 2.7}) {
        double w = dev.omega_m + off * st.gamma_eff;
        double d1 = analytic::squashing_dip(w, dev, G, A0, noise, st.gamma_eff);
        double d2 = analytic::squashing_dip(-w, dev, G, A0, noise, st.gamma_eff);
        dip_asym = std::max(dip_asym, std::abs(d1 - d2) / std::abs(d1));
    }
    // total sideband weights differ through the zero-point asymmetry term
    double asym = analytic::sideband_asymmetry_term(dev.omega_m, dev, G, st.gamma_eff) -
                  analytic::sideband_asymmetry_term(-dev.omega_m, dev, G, st.gamma_eff);
    bool pass = checked > 100 && worst < 0.01 && dip_asym < 1e-12 && asym != 0.0;
    report(5, "bad-cavity squashing spectrum", pass,
           fmt("pointwise worst dev %.2e over %zu points; dip symmetric to %.1e", worst,
               checked, dip_asym));
}

// 6. feedback-chain reduction phases
void criterion_6() {
    auto dev = reference_device();
    FeedbackChain ch;
    ch.detuning_f = hz_to_rad(-20e6);
    ch.carrier_amplitude = 1.0;
    ch.electronic_gain = 1.0;
    auto r = analytic::feedback_chain_reduce(dev, ch);
    double dphi = rad_to_deg(r.phi_tilde - r.phi_tilde_prime);
    double ratio = r.amp_upper / r.amp_lower;
    bool pass = std::abs(dphi - (-176.0)) <= 1.0 && ratio > 2.0;
    report(6, "feedback-chain interference phase", pass,
           fmt("phase difference %.2f deg (target -176 +/- 1), amplitude ratio %.2f", dphi,
               ratio));
}

// 7. time-domain vs frequency-domain cross-validation
struct OracleCase {
    const char* name;
    OpmDevice dev;
    ProbeTone probe;
    FeedbackFilter filter;
    NoiseBudget noise;
    double duration;
    std::uint64_t seed;
};

void criterion_7() {
    OpmDevice slow;
    slow.omega_m = hz_to_rad(1e5);
    slow.gamma = hz_to_rad(1e3);
    slow.kappa = hz_to_rad(1.05e5);
    slow.omega_c = hz_to_rad(5e9);
    slow.g0 = hz_to_rad(130.0);
    OpmDevice fast = slow;
    fast.omega_m = hz_to_rad(1e6);
    fast.kappa = hz_to_rad(1.05e6);
    fast.gamma = hz_to_rad(100.0);

    auto a0_for = [&](const OpmDevice& d, double G, double gfb) {
        return gfb * std::sqrt(d.kappa * d.kappa + 4.0 * d.omega_m * d.omega_m) / (4.0 * G);
    };
    double Gf = hz_to_rad(5e4);
    double phf = analytic::optimal_phase(fast.kappa, fast.omega_m);

    std::vector<OracleCase> cases = {
        {"open loop n=5", slow, {0, 0, {}}, {0, 0}, {5.0, 0.0, 0.0}, 2.0, 21},
        {"open loop n=205", slow, {0, 0, {}}, {0, 0}, {205.0, 0.0, 0.0}, 2.0, 7},
        {"feedback 10x", fast, {0, Gf, {}}, {a0_for(fast, Gf, 10.0 * fast.gamma), phf},
         {205.0, 13.0, 0.0}, 1.2, 30},
        {"feedback 25x", fast, {0, Gf, {}}, {a0_for(fast, Gf, 25.0 * fast.gamma), phf},
         {205.0, 13.0, 0.0}, 0.6, 11},
        {"feedback 50x", fast, {0, Gf, {}}, {a0_for(fast, Gf, 50.0 * fast.gamma), phf},
         {205.0, 1.0, 0.0}, 0.5, 5},
    };

    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        auto st = linsolve::stability(c.dev, c.probe, c.filter);
        auto grid = default_grid(std::abs(st.omega_eff), st.gamma_eff);
        auto tr = linsolve::solve_closed_loop(c.dev, c.probe, c.filter, grid);
        double n_freq = linsolve::occupation_numeric(
            linsolve::displacement_spectrum(tr, c.noise),
            linsolve::momentum_spectrum(tr, c.noise));
        auto cfg = tdoracle::make_config(c.dev, c.filter, c.duration, c.seed,
                                         10.0 / st.gamma_eff);
        auto ts = tdoracle::simulate(c.dev, c.probe, c.filter, c.noise, cfg);
        double n_time = tdoracle::occupation_estimate(ts);
        std::size_t seg = static_cast<std::size_t>(
            std::llround(std::min(150.0 / st.gamma_eff / ts.dt,
                                  static_cast<double>(ts.x.size()) / 8.0)));
        auto pg = tdoracle::periodogram(ts.x, ts.dt, seg, 0.5);
        auto fit = fitting::fit_lorentzian(pg, st.omega_eff - 10.0 * st.gamma_eff,
                                           st.omega_eff + 10.0 * st.gamma_eff);
        double occ_dev = std::abs(n_time - n_freq) / n_freq;
        double lw_dev = std::abs(fit.fwhm - st.gamma_eff) / st.gamma_eff;
        if (occ_dev > 0.05 || lw_dev > 0.05) pass = false;
        detail += fmt("%s occ %.1f%% lw %.1f%%; ", c.name, 100 * occ_dev, 100 * lw_dev);
    }

    // determinism under a fixed seed
    const auto& c0 = cases.front();
    auto cfg0 = tdoracle::make_config(c0.dev, c0.filter, 0.05, c0.seed, 0.0);
    auto t1 = tdoracle::simulate(c0.dev, c0.probe, c0.filter, c0.noise, cfg0);
    auto t2 = tdoracle::simulate(c0.dev, c0.probe, c0.filter, c0.noise, cfg0);
    if (!(t1.x == t2.x && t1.detected == t2.detected)) {
        pass = false;
        detail += "nondeterministic; ";
    }
    report(7, "time/frequency cross-validation (5 configurations)", pass, detail);
}

// 8. equipartition sum rule
void criterion_8() {
    auto dev = reference_device();
    FeedbackFilter f{0.0, 0.0};
    ProbeTone probe{0.0, 0.0, {}};
    auto grid = default_grid(dev.omega_m, dev.gamma);
    auto tr = linsolve::solve_closed_loop(dev, probe, f, grid);
    bool pass = true;
    std::string detail;
    for (double n : {0.0, 1.0, 205.0, 5000.0}) {
        NoiseBudget noise{n, 0.0, 0.0};
        double got = linsolve::occupation_numeric(linsolve::displacement_spectrum(tr, noise),
                                                  linsolve::momentum_spectrum(tr, noise)) +
                     0.5;
        double dev_rel = std::abs(got - (n + 0.5)) / (n + 0.5);
        if (dev_rel > 0.005) pass = false;
        detail += fmt("n=%g: %.3g%%; ", n, 100 * dev_rel);
    }
    report(8, "open-loop sum rule", pass, detail);
}

// 9. calibration round trips
void criterion_9() {
    auto dev = reference_device();
    double P_true = hz_to_rad(2.4e3);
    std::vector<double> powers{0.5, 1.0, 2.0, 4.0, 8.0}, gopt;
    for (double P : powers) gopt.push_back(P_true * P);
    auto pcal = fitting::calibrate_power(powers, gopt, dev);

    double L_true = 40.0 * dev.gamma;
    std::vector<double> gains{0.5, 1.0, 2.0, 4.0}, widths;
    for (double g : gains) widths.push_back(dev.gamma + L_true * g);
    auto gcal = fitting::calibrate_gain(gains, widths, dev.gamma);

    double Gb = hz_to_rad(104e3);
    double phi_b = analytic::optimal_phase_blue_sideband(dev.kappa, dev.omega_m);
    auto rates = analytic::blue_sideband_rates(dev, Gb, FeedbackFilter{0.0, phi_b});
    double gel_crit = (rates.gamma_opt - dev.gamma) / gcal.L_coeff;
    double a0_cal = fitting::gain_to_A0_bsb(gcal, gel_crit, Gb, dev);
    double a0_num = linsolve::find_stability_boundary(dev, ProbeTone{dev.omega_m, Gb, {}},
                                                     phi_b, 0.1 * a0_cal, 10.0 * a0_cal);

    double p_dev = std::abs(pcal.P_coeff - P_true) / P_true;
    double l_dev = std::abs(gcal.L_coeff - L_true) / L_true;
    double b_dev = std::abs(a0_cal - a0_num) / a0_num;
    bool pass = p_dev <= 0.005 && l_dev <= 0.005 && b_dev <= 0.01;
    report(9, "calibration round trips", pass,
           fmt("P %.2e, L %.2e, blue-sideband boundary %.2e", p_dev, l_dev, b_dev));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures;
}
