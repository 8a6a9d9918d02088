#include "omsim/linsolve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace omsim::linsolve {

namespace {

using Eigen::Matrix4cd;
using Eigen::Vector4cd;

cplx filter_response(const FeedbackFilter& f, cplx omega, double omega_m) {
    return f.gain * std::exp(cplx(0, -1) * f.phase * omega / omega_m);
}

double thermal_force_psd(const OpmDevice& dev, const NoiseBudget& noise) {
    // pinned by the open-loop sum rule: integrated (S_x + S_p)/2 = n_m^T + 1/2
    return 2.0 * dev.gamma * dev.omega_m * dev.omega_m * (noise.bath_occupation + 0.5);
}

struct PointSolve {
    Matrix4cd T;  // (x_c, y_c, x, p) <- (x_in, y_in, f_th, y_add)
};

PointSolve solve_point(double w, const OpmDevice& dev, const ProbeTone& probe,
                       const FeedbackFilter& filter) {
    const double k = dev.kappa, wm = dev.omega_m, gam = dev.gamma;
    const double G = probe.coupling, delta = probe.detuning;
    const cplx iw(0, w);
    const cplx chi_inv = k / 2.0 - iw;
    const cplx A = filter_response(filter, cplx(w, 0), wm);
    const double sk = std::sqrt(k);

    Matrix4cd M;
    M << chi_inv, delta, 0, 0,
        -delta, chi_inv, 2.0 * G, 0,
        0, 0, -iw, -wm,
        2.0 * G, -A, wm, gam - iw;

    Matrix4cd N = Matrix4cd::Zero();
    N(0, 0) = sk;
    N(1, 1) = sk;
    N(3, 1) = -A / sk;
    N(3, 2) = 1.0 / wm;
    N(3, 3) = A / sk;

    PointSolve out;
    out.T = M.partialPivLu().solve(N);
    if (!out.T.allFinite()) {
        std::ostringstream msg;
        msg << "closed-loop system singular at omega/2pi = " << rad_to_hz(w)
            << " Hz (pole on the real axis)";
        throw std::runtime_error(msg.str());
    }
    return out;
}

// Peak diagnostics used by the resolution and span guards.
struct PeakInfo {
    std::size_t index = 0;
    double center = 0;
    double fwhm = 0;
    double height = 0;
    std::size_t points_in_fwhm = 0;
};

PeakInfo locate_peak(const Spectrum& s, bool positive_side) {
    const auto& w = s.grid.points;
    PeakInfo p;
    double best = -1;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (positive_side ? w[i] <= 0 : w[i] >= 0) continue;
        if (s.values[i] > best) {
            best = s.values[i];
            p.index = i;
        }
    }
    p.height = best;
    p.center = w[p.index];
    double half = best / 2.0;
    std::size_t lo = p.index, hi = p.index;
    while (lo > 0 && s.values[lo - 1] > half) --lo;
    while (hi + 1 < w.size() && s.values[hi + 1] > half) ++hi;
    p.fwhm = w[hi] - w[lo];
    p.points_in_fwhm = hi - lo + 1;
    return p;
}

Spectrum quadrature_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise,
                             int var, SpectrumKind kind) {
    const double s_ff = thermal_force_psd(t.device, noise);
    const std::array<double, 4> diag = {0.5 + noise.cavity_occupation,
                                        0.5 + noise.cavity_occupation, s_ff,
                                        noise.amplifier_noise};
    Spectrum s;
    s.grid = t.grid;
    s.kind = kind;
    s.values.resize(t.grid.size());
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        double v = 0;
        for (int u = 0; u < 4; ++u) v += std::norm(t.coef(i, var, u)) * diag[u];
        s.values[i] = v;
    }
    return s;
}

void check_resolution(const Spectrum& s) {
    for (bool side : {true, false}) {
        PeakInfo p = locate_peak(s, side);
        if (p.points_in_fwhm < 10) {
            std::ostringstream msg;
            msg << "grid under-resolved near peak at omega/2pi = " << rad_to_hz(p.center)
                << " Hz; need spacing <= " << rad_to_hz(p.fwhm / 10.0) << " Hz";
            throw std::runtime_error(msg.str());
        }
    }
}

}  // namespace

ClosedLoopTransfer solve_closed_loop(const OpmDevice& dev, const ProbeTone& probe,
                                     const FeedbackFilter& filter,
                                     const FrequencyGrid& grid) {
    grid.validate();
    ClosedLoopTransfer t;
    t.grid = grid;
    t.device = dev;
    t.probe = probe;
    t.filter = filter;
    t.response.resize(grid.size());
    t.out_x.resize(grid.size());
    t.out_y.resize(grid.size());
    const double sk = std::sqrt(dev.kappa);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        PointSolve ps = solve_point(grid.points[i], dev, probe, filter);
        for (int v = 0; v < 4; ++v)
            for (int u = 0; u < 4; ++u) t.response[i][4 * v + u] = ps.T(v, u);
        for (int u = 0; u < 4; ++u) {
            t.out_x[i][u] = sk * ps.T(0, u);
            t.out_y[i][u] = sk * ps.T(1, u);
        }
        t.out_x[i][0] -= 1.0;  // x_out = sqrt(k) x_c - x_in
        t.out_y[i][1] -= 1.0;  // y_out = sqrt(k) y_c - y_in
        t.out_y[i][3] += 1.0;  // detected quadrature includes y_add
    }
    return t;
}

Spectrum displacement_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise) {
    Spectrum s = quadrature_spectrum(t, noise, 2, SpectrumKind::displacement);
    check_resolution(s);
    return s;
}

Spectrum momentum_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise) {
    Spectrum s = quadrature_spectrum(t, noise, 3, SpectrumKind::momentum);
    check_resolution(s);
    return s;
}

Spectrum output_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise) {
    const double s_ff = thermal_force_psd(t.device, noise);
    const double nc = noise.cavity_occupation, nadd = noise.amplifier_noise;
    // quantum input correlator matrix S_uv = <u[w] v[-w]>
    Eigen::Matrix4cd S = Eigen::Matrix4cd::Zero();
    S(0, 0) = 0.5 + nc;
    S(1, 1) = 0.5 + nc;
    S(0, 1) = cplx(0, 0.5);
    S(1, 0) = cplx(0, -0.5);
    S(2, 2) = s_ff;
    S(3, 3) = nadd;

    Spectrum s;
    s.grid = t.grid;
    s.kind = SpectrumKind::heterodyne_output;
    s.values.resize(t.grid.size());
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        Eigen::Vector4cd cx, cy;
        for (int u = 0; u < 4; ++u) {
            cx(u) = t.out_x[i][u];
            cy(u) = t.out_y[i][u];
        }
        cplx sxx = (cx.transpose() * S * cx.conjugate())(0);
        cplx syy = (cy.transpose() * S * cy.conjugate())(0);
        cplx sxy = (cx.transpose() * S * cy.conjugate())(0);
        cplx syx = (cy.transpose() * S * cx.conjugate())(0);
        cplx aa = 0.5 * (sxx + syy + cplx(0, 1) * sxy - cplx(0, 1) * syx);
        if (std::abs(aa.imag()) > 1e-12 * (std::abs(aa.real()) + 1.0))
            throw std::runtime_error("output spectrum acquired an imaginary part");
        // amplifier noise on the undetected quadrature raises the recorded
        // background to n_add + 1/2 without entering the loop
        s.values[i] = aa.real() + 0.5 * nadd + 0.5;
    }
    return s;
}

double occupation_numeric(const Spectrum& s_x, const Spectrum& s_p) {
    if (s_x.grid.points != s_p.grid.points)
        throw std::invalid_argument("occupation_numeric requires matching grids");
    for (const Spectrum* s : {&s_x, &s_p}) {
        for (bool side : {true, false}) {
            PeakInfo p = locate_peak(*s, side);
            double margin = 20.0 * p.fwhm;
            if (s->grid.back() < std::abs(p.center) + margin ||
                s->grid.front() > -std::abs(p.center) - margin) {
                std::ostringstream msg;
                msg << "grid span too small: need +- " << rad_to_hz(std::abs(p.center) + margin)
                    << " Hz around DC";
                throw std::runtime_error(msg.str());
            }
        }
    }
    const auto& w = s_x.grid.points;
    double integral = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        double fa = 0.5 * (s_x.values[i - 1] + s_p.values[i - 1]);
        double fb = 0.5 * (s_x.values[i] + s_p.values[i]);
        integral += 0.5 * (fa + fb) * (w[i] - w[i - 1]);
    }
    return integral / two_pi - 0.5;
}

cplx characteristic(cplx omega, const OpmDevice& dev, const ProbeTone& probe,
                    const FeedbackFilter& filter) {
    const double k = dev.kappa, wm = dev.omega_m, gam = dev.gamma;
    const double G = probe.coupling, delta = probe.detuning;
    const cplx chi_inv = k / 2.0 - cplx(0, 1) * omega;
    const cplx A = filter_response(filter, omega, wm);
    const cplx dc = chi_inv * chi_inv + delta * delta;
    return wm * wm - omega * omega - cplx(0, 1) * omega * gam +
           wm * (4.0 * G * G * delta + 2.0 * G * A * chi_inv) / dc;
}

StabilityResult stability(const OpmDevice& dev, const ProbeTone& probe,
                          const FeedbackFilter& filter) {
    cplx w(dev.omega_m, -dev.gamma / 2.0);
    const double h = std::max(1.0, 1e-9 * dev.omega_m);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        cplx f = characteristic(w, dev, probe, filter);
        cplx fp = (characteristic(w + h, dev, probe, filter) -
                   characteristic(w - h, dev, probe, filter)) /
                  (2.0 * h);
        cplx wn = w - f / fp;
        if (std::abs(wn - w) < 1e-10 * std::abs(wn) + 1e-12) {
            w = wn;
            converged = true;
            break;
        }
        w = wn;
    }
    if (!converged || !std::isfinite(w.real()) || !std::isfinite(w.imag())) {
        std::ostringstream msg;
        msg << "pole search failed to converge from seed omega_m - i gamma/2 = ("
            << rad_to_hz(dev.omega_m) << ", " << rad_to_hz(-dev.gamma / 2.0)
            << ") Hz; last iterate (" << rad_to_hz(w.real()) << ", "
            << rad_to_hz(w.imag()) << ") Hz";
        throw std::runtime_error(msg.str());
    }
    StabilityResult r;
    r.omega_eff = w.real();
    r.gamma_eff = -2.0 * w.imag();
    r.stable = r.gamma_eff > 0;
    return r;
}

double find_stability_boundary(const OpmDevice& dev, const ProbeTone& probe,
                               double phase, double gain_lo, double gain_hi) {
    auto geff = [&](double a0) {
        FeedbackFilter f{a0, phase};
        return stability(dev, probe, f).gamma_eff;
    };
    double glo = geff(gain_lo), ghi = geff(gain_hi);
    if ((glo > 0) == (ghi > 0))
        throw std::runtime_error("no stability change in gain bracket");
    const double tol = 1e-3 * dev.gamma;
    double lo = gain_lo, hi = gain_hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double g = geff(mid);
        if (std::abs(g) < tol) return mid;
        if ((g > 0) == (ghi > 0))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace omsim::linsolve
