#include "omsim/fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace omsim::fitting {

namespace {

double lorentz(double w, double c, double h, double area, double b) {
    double half = h / 2.0;
    return b + (area / (two_pi / 2.0)) * half / ((w - c) * (w - c) + half * half);
}

}  // namespace

LorentzianFit fit_lorentzian(const linsolve::Spectrum& spec, double window_lo,
                             double window_hi) {
    std::vector<double> w, y;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        double wi = spec.grid.points[i];
        if (wi >= window_lo && wi <= window_hi) {
            w.push_back(wi);
            y.push_back(spec.values[i]);
        }
    }
    const std::size_t n = w.size();
    if (n < 5) throw std::invalid_argument("fit window contains fewer than 5 points");

    // initial guesses; a dip is a peak of the negated, re-baselined data
    double edge = 0.5 * (y.front() + y.back());
    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] > y[imax]) imax = i;
        if (y[i] < y[imin]) imin = i;
    }
    bool dip = (edge - y[imin]) > (y[imax] - edge);
    std::size_t ipk = dip ? imin : imax;
    double height = y[ipk] - edge;

    // half-width from the half-maximum crossings
    double half_level = edge + height / 2.0;
    std::size_t lo = ipk, hi = ipk;
    auto above = [&](std::size_t i) { return dip ? y[i] < half_level : y[i] > half_level; };
    while (lo > 0 && above(lo - 1)) --lo;
    while (hi + 1 < n && above(hi + 1)) ++hi;
    if (hi - lo < 2) throw std::invalid_argument("peak narrower than 3 grid points");
    double h0 = std::max(w[hi] - w[lo], w[1] - w[0]);

    Eigen::Vector4d p;  // (center, fwhm, area, baseline)
    p << w[ipk], h0, height * (two_pi / 4.0) * h0, edge;

    double lambda = 1e-3;
    double prev_ssr = std::numeric_limits<double>::max();
    Eigen::Matrix4d jtj_final = Eigen::Matrix4d::Zero();
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
        double ssr = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = p(0), h = p(1), a = p(2), b = p(3);
            double half = h / 2.0;
            double d = (w[i] - c) * (w[i] - c) + half * half;
            double f = b + (a / (two_pi / 2.0)) * half / d;
            double r = y[i] - f;
            ssr += r * r;
            Eigen::Vector4d J;
            J(0) = (a / (two_pi / 2.0)) * half * 2.0 * (w[i] - c) / (d * d);
            J(1) = (a / (two_pi / 2.0)) * 0.5 * (d - half * h) / (d * d);
            J(2) = half / ((two_pi / 2.0) * d);
            J(3) = 1.0;
            jtj += J * J.transpose();
            jtr += J * r;
        }
        jtj_final = jtj;
        if (it > 0 && std::abs(prev_ssr - ssr) <= 1e-12 * (ssr + 1e-300)) {
            converged = true;
            break;
        }
        Eigen::Matrix4d damped = jtj;
        damped.diagonal() *= (1.0 + lambda);
        Eigen::Vector4d step = damped.ldlt().solve(jtr);
        Eigen::Vector4d pn = p + step;
        // evaluate trial
        double ssr_n = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - lorentz(w[i], pn(0), pn(1), pn(2), pn(3));
            ssr_n += r * r;
        }
        if (ssr_n < ssr && std::isfinite(ssr_n) && pn(1) > 0) {
            p = pn;
            lambda = std::max(lambda / 3.0, 1e-12);
            prev_ssr = ssr;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
            prev_ssr = ssr;
        }
    }
    if (!converged) throw std::runtime_error("lorentzian fit did not converge");

    LorentzianFit fit;
    fit.center = p(0);
    fit.fwhm = p(1);
    fit.area = p(2);
    fit.baseline = p(3);
    fit.dip = fit.area < 0;
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - lorentz(w[i], p(0), p(1), p(2), p(3));
        ssr += r * r;
    }
    double peak = std::abs(lorentz(p(0), p(0), p(1), p(2), p(3)) - p(3));
    fit.goodness = peak > 0 ? std::sqrt(ssr / static_cast<double>(n)) / peak : 0;
    if (n > 4) {
        double sigma2 = ssr / static_cast<double>(n - 4);
        Eigen::Matrix4d cov = sigma2 * jtj_final.inverse();
        fit.center_err = std::sqrt(std::max(cov(0, 0), 0.0));
        fit.fwhm_err = std::sqrt(std::max(cov(1, 1), 0.0));
        fit.area_err = std::sqrt(std::max(cov(2, 2), 0.0));
    }
    return fit;
}

PowerCalibration calibrate_power(const std::vector<double>& powers,
                                 const std::vector<double>& gamma_opt,
                                 const OpmDevice& dev) {
    if (powers.size() != gamma_opt.size())
        throw std::invalid_argument("powers and gamma_opt lists differ in length");
    if (powers.size() < 3) throw std::invalid_argument("need at least 3 calibration points");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        num += powers[i] * gamma_opt[i];
        den += powers[i] * powers[i];
    }
    PowerCalibration cal;
    cal.P_coeff = num / den;
    if (!(cal.P_coeff > 0)) throw std::runtime_error("non-positive power calibration slope");
    double ratio = dev.kappa / (4.0 * dev.omega_m);
    for (double P : powers)
        cal.G_rsb.push_back(0.5 * std::sqrt(cal.P_coeff * P * dev.kappa * (1.0 + ratio * ratio)));
    return cal;
}

double detuning_transfer(double G_rsb, double detuning, const OpmDevice& dev) {
    auto chi_mag = [&](double d) {
        return 1.0 / std::sqrt(dev.kappa * dev.kappa / 4.0 + d * d);
    };
    return G_rsb * chi_mag(detuning) / chi_mag(-dev.omega_m);
}

GainCalibration calibrate_gain(const std::vector<double>& gains,
                               const std::vector<double>& linewidths,
                               double gamma) {
    if (gains.size() != linewidths.size())
        throw std::invalid_argument("gains and linewidths lists differ in length");
    double num = 0, den = 0;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (!(gains[i] > 0)) continue;
        num += gains[i] * (linewidths[i] - gamma);
        den += gains[i] * gains[i];
        ++valid;
    }
    if (valid < 2) throw std::invalid_argument("need at least 2 points with positive gain");
    GainCalibration cal;
    cal.L_coeff = num / den;
    if (!(cal.L_coeff > 0)) throw std::runtime_error("non-positive gain calibration slope");
    return cal;
}

double gain_to_A0(const GainCalibration& cal, double electronic_gain, double G,
                  const OpmDevice& dev) {
    double k = dev.kappa, w = dev.omega_m;
    return cal.L_coeff * electronic_gain * std::sqrt(k * k + 4.0 * w * w) / (4.0 * G);
}

double gain_to_A0_bsb(const GainCalibration& cal, double electronic_gain, double G,
                      const OpmDevice& dev) {
    double k2 = dev.kappa * dev.kappa, w2 = dev.omega_m * dev.omega_m;
    double root = std::sqrt(k2 * k2 + 20.0 * k2 * w2 + 64.0 * w2 * w2);
    return cal.L_coeff * electronic_gain * (dev.kappa * k2 + 16.0 * dev.kappa * w2) /
           (4.0 * G * root);
}

double fit_bath_occupation(const linsolve::Spectrum& measured, const OpmDevice& dev,
                           const ProbeTone& probe, const FeedbackFilter& filter,
                           double amplifier_noise, double freq_offset) {
    FrequencyGrid grid = measured.grid;
    for (double& w : grid.points) w += freq_offset;
    auto transfer = linsolve::solve_closed_loop(dev, probe, filter, grid);
    NoiseBudget n0{0.0, amplifier_noise, 0.0};
    NoiseBudget n1{1.0, amplifier_noise, 0.0};
    auto s0 = linsolve::output_spectrum(transfer, n0);
    auto s1 = linsolve::output_spectrum(transfer, n1);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double basis = s1.values[i] - s0.values[i];  // model is affine in n_m^T
        num += (measured.values[i] - s0.values[i]) * basis;
        den += basis * basis;
    }
    if (!(den > 0)) throw std::runtime_error("bath occupation unidentifiable on this grid");
    double n = num / den;
    if (n < 0) throw std::runtime_error("bath occupation fit hit the n_m^T >= 0 boundary");
    return n;
}

linsolve::Spectrum read_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    linsolve::Spectrum s;
    std::string line;
    bool header_seen = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("freq_hz", 0) != 0)
                throw std::runtime_error(path + ": expected freq_hz,value_quanta header at line " +
                                         std::to_string(lineno));
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw std::runtime_error(path + ": malformed row at line " + std::to_string(lineno));
        s.grid.points.push_back(hz_to_rad(std::stod(a)));
        s.values.push_back(std::stod(b));
    }
    s.grid.validate();
    return s;
}

}  // namespace omsim::fitting
