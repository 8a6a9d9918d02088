#include "omsim/tdoracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <deque>
#include <random>
#include <sstream>
#include <stdexcept>

namespace omsim::tdoracle {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a_d(std::uint64_t h, double v) { return fnv1a(h, &v, sizeof v); }

std::string config_hash(const OpmDevice& dev, const ProbeTone& probe,
                        const FeedbackFilter& filter, const NoiseBudget& noise,
                        const SimConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (double v : {dev.omega_m, dev.gamma, dev.kappa, dev.omega_c, dev.g0,
                     probe.detuning, probe.coupling, filter.gain, filter.phase,
                     noise.bath_occupation, noise.amplifier_noise,
                     noise.cavity_occupation, cfg.dt, cfg.duration, cfg.burn_in,
                     static_cast<double>(cfg.delay_taps)})
        h = fnv1a_d(h, v);
    h = fnv1a(h, &cfg.seed, sizeof cfg.seed);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

// The frequency-domain model runs in the e^{-i omega t} convention, where a
// physical delay line has transfer e^{+i omega tau}. The filter phase phi is
// therefore realized as a delay of (2 pi - phi)/omega_m, exact at omega_m.
double filter_delay(const OpmDevice& dev, const FeedbackFilter& filter) {
    double phi = wrap_phase(filter.phase);
    if (phi == 0.0) return 0.0;
    return (two_pi - phi) / dev.omega_m;
}

SimConfig make_config(const OpmDevice& dev, const FeedbackFilter& filter,
                      double duration, std::uint64_t seed, double burn_in) {
    SimConfig cfg;
    cfg.dt = two_pi / (50.0 * std::max(dev.omega_m, dev.kappa));
    double tau = filter_delay(dev, filter);
    // nudge dt downward so the delay is a whole number of steps
    cfg.delay_taps = static_cast<int>(std::ceil(tau / cfg.dt - 1e-12));
    if (cfg.delay_taps > 0) cfg.dt = tau / cfg.delay_taps;
    cfg.duration = duration;
    cfg.seed = seed;
    cfg.burn_in = burn_in;
    return cfg;
}

void validate_config(const SimConfig& cfg, const OpmDevice& dev,
                     const FeedbackFilter& filter) {
    double dt_max = two_pi / (50.0 * std::max(dev.omega_m, dev.kappa));
    if (!(cfg.dt > 0) || cfg.dt > dt_max * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "dt = " << cfg.dt << " s exceeds bound " << dt_max << " s";
        throw std::invalid_argument(msg.str());
    }
    if (!(cfg.duration > 0)) throw std::invalid_argument("duration must be positive");
    double tau = filter_delay(dev, filter);
    if (std::abs(cfg.delay_taps * cfg.dt - tau) > cfg.dt / 2.0)
        throw std::invalid_argument(
            "delay_taps*dt does not realize the filter phase within dt/2");
}

TimeSeries simulate(const OpmDevice& dev, const ProbeTone& probe,
                    const FeedbackFilter& filter, const NoiseBudget& noise,
                    const SimConfig& cfg) {
    validate_config(cfg, dev, filter);
    const double dt = cfg.dt;
    const double k = dev.kappa, wm = dev.omega_m, gam = dev.gamma;
    const double G = probe.coupling, delta = probe.detuning;
    const double A0 = filter.gain, sk = std::sqrt(k);

    const std::size_t n_burn = static_cast<std::size_t>(std::llround(cfg.burn_in / dt));
    const std::size_t n_keep = static_cast<std::size_t>(std::llround(cfg.duration / dt));

    // two-sided PSDs of the white inputs; increments dW ~ N(0, S dt)
    const double s_cav = 0.5 + noise.cavity_occupation;
    const double s_th = 2.0 * gam * (noise.bath_occupation + 0.5);  // on f_th/omega_m
    const double s_add = noise.amplifier_noise;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> nrm;
    const double sig_cav = std::sqrt(s_cav * dt);
    const double sig_th = std::sqrt(s_th * dt);
    const double sig_add = std::sqrt(s_add * dt);

    std::deque<double> delay(static_cast<std::size_t>(cfg.delay_taps) + 1, 0.0);

    TimeSeries ts;
    ts.dt = dt;
    ts.seed = cfg.seed;
    ts.config_hash = config_hash(dev, probe, filter, noise, cfg);
    ts.x.reserve(n_keep);
    ts.p.reserve(n_keep);
    ts.detected.reserve(n_keep);

    double xc = 0, yc = 0, x = 0, p = 0;
    for (std::size_t i = 0; i < n_burn + n_keep; ++i) {
        const double dWx = sig_cav * nrm(rng);
        const double dWy = sig_cav * nrm(rng);
        const double dWth = sig_th * nrm(rng);
        const double dWadd = sig_add * nrm(rng);

        // detected = y_out + y_add, sampled as band-limited white noise
        const double detected = sk * yc + (-dWy + dWadd) / dt;
        delay.push_back(detected);
        const double fed = delay.front();
        delay.pop_front();

        const double xc_new = xc + dt * (-k / 2.0 * xc - delta * yc) + sk * dWx;
        const double yc_new = yc + dt * (delta * xc - k / 2.0 * yc - 2.0 * G * x) + sk * dWy;

        // symplectic update of the mechanics (explicit Euler anti-damps at
        // omega_m^2 dt / 2, far above gamma)
        const double p_new =
            p + dt * (-wm * x - gam * p - 2.0 * G * xc + A0 / sk * fed) + dWth;
        const double x_new = x + dt * wm * p_new;

        xc = xc_new;
        yc = yc_new;
        x = x_new;
        p = p_new;

        if (std::abs(x) > 1e6 && !cfg.allow_unstable)
            throw std::runtime_error("trajectory diverged (|x| > 1e6): configuration unstable");

        if (i >= n_burn) {
            ts.x.push_back(x);
            ts.p.push_back(p);
            ts.detected.push_back(detected);
        }
    }
    return ts;
}

double occupation_estimate(const TimeSeries& ts) {
    if (ts.x.empty()) throw std::invalid_argument("empty time series");
    double acc = 0;
    for (std::size_t i = 0; i < ts.x.size(); ++i)
        acc += 0.5 * (ts.x[i] * ts.x[i] + ts.p[i] * ts.p[i]);
    return acc / static_cast<double>(ts.x.size()) - 0.5;
}

linsolve::Spectrum periodogram(const std::vector<double>& series, double dt,
                               std::size_t segment_length, double overlap) {
    const std::size_t n = segment_length;
    if (series.size() < n)
        throw std::invalid_argument("series shorter than one segment");
    if (!(overlap >= 0 && overlap < 1))
        throw std::invalid_argument("overlap must be in [0, 1)");

    std::vector<double> window(n);
    double wsum2 = 0;
    for (std::size_t j = 0; j < n; ++j) {
        window[j] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(j) /
                                          static_cast<double>(n)));
        wsum2 += window[j] * window[j];
    }

    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
        FFTW_ESTIMATE);

    std::vector<double> psd(n, 0.0);
    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(n * (1.0 - overlap)));
    std::size_t count = 0;
    for (std::size_t start = 0; start + n <= series.size(); start += hop) {
        for (std::size_t j = 0; j < n; ++j) in[j] = series[start + j] * window[j];
        fftw_execute(plan);
        for (std::size_t j = 0; j <= n / 2; ++j) {
            double v = std::norm(out[j]) * dt / wsum2;
            psd[j] += v;
            if (j > 0 && j < n - j) psd[n - j] += v;  // real input: mirror
        }
        ++count;
    }
    fftw_destroy_plan(plan);
    if (count == 0) throw std::invalid_argument("no complete segment");

    linsolve::Spectrum s;
    s.kind = linsolve::SpectrumKind::displacement;
    s.grid.points.resize(n);
    s.values.resize(n);
    const double dw = two_pi / (static_cast<double>(n) * dt);
    // unwrap to a strictly increasing two-sided grid (fftshift)
    const std::size_t shift = (n + 1) / 2;
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t k = (j + shift) % n;  // k runs over FFT bins
        double w = (k < shift) ? dw * static_cast<double>(k)
                               : -dw * static_cast<double>(n - k);
        s.grid.points[j] = w;
        s.values[j] = psd[k] / static_cast<double>(count);
    }
    s.grid.validate();
    return s;
}

void dump_csv(const TimeSeries& ts, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "# omsim time series\n# seed=%llu\n# config_hash=%s\n# dt=%.17g\n",
                 static_cast<unsigned long long>(ts.seed), ts.config_hash.c_str(), ts.dt);
    std::fprintf(f, "t,x,p,detected\n");
    for (std::size_t i = 0; i < ts.x.size(); ++i)
        std::fprintf(f, "%.9g,%.9g,%.9g,%.9g\n", ts.dt * static_cast<double>(i),
                     ts.x[i], ts.p[i], ts.detected[i]);
    std::fclose(f);
}

}  // namespace omsim::tdoracle
