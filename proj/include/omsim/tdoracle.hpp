#ifndef OMSIM_TDORACLE_HPP
#define OMSIM_TDORACLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "omsim/linsolve.hpp"
#include "omsim/types.hpp"

// Time-domain stochastic integrator of the same closed loop, kept entirely
// independent of the frequency-domain solver so the two can cross-validate.
// The filter is realized as a pure delay line plus gain, exact at omega_m and
// a controlled approximation across the narrow mechanical band.
namespace omsim::tdoracle {

// Delay (s) that realizes the filter phase at omega_m.
double filter_delay(const OpmDevice& dev, const FeedbackFilter& filter);

struct SimConfig {
    double dt = 0;        // s
    double duration = 0;  // s, after burn-in
    std::uint64_t seed = 0;
    double burn_in = 0;     // s, discarded
    int delay_taps = 0;     // filter delay in steps
    bool allow_unstable = false;
};

// Picks dt from the fastest rate, rounds the filter delay to whole steps.
SimConfig make_config(const OpmDevice& dev, const FeedbackFilter& filter,
                      double duration, std::uint64_t seed, double burn_in = 0);

// Throws std::invalid_argument on a config violating the step-size or
// delay-rounding bounds for this device/filter.
void validate_config(const SimConfig& cfg, const OpmDevice& dev,
                     const FeedbackFilter& filter);

struct TimeSeries {
    double dt = 0;
    std::vector<double> x, p, detected;
    std::uint64_t seed = 0;
    std::string config_hash;  // over device/probe/filter/noise/cfg
};

// Semi-implicit (symplectic for the mechanics) Euler-Maruyama run. The
// detected record is y_out + y_add, the same signal the delay line taps.
// Classical noise realizations: the quantum cross-correlators of the input
// field are not representable, so only symmetrized observables are
// comparable against the frequency-domain solver.
TimeSeries simulate(const OpmDevice& dev, const ProbeTone& probe,
                    const FeedbackFilter& filter, const NoiseBudget& noise,
                    const SimConfig& cfg);

// Mean of (x^2 + p^2)/2 - 1/2 over the retained samples.
double occupation_estimate(const TimeSeries& ts);

// Welch-averaged two-sided periodogram (Hann window), calibrated so that the
// trapezoid integral over d omega / 2 pi equals the series variance.
linsolve::Spectrum periodogram(const std::vector<double>& series, double dt,
                               std::size_t segment_length, double overlap = 0.5);

// CSV dump of (t, x, p, detected) with a # header carrying seed and hash.
void dump_csv(const TimeSeries& ts, const std::string& path);

}  // namespace omsim::tdoracle

#endif
