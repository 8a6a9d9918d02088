#ifndef OMSIM_LINSOLVE_HPP
#define OMSIM_LINSOLVE_HPP

#include <array>
#include <complex>
#include <vector>

#include "omsim/grid.hpp"
#include "omsim/types.hpp"

// Frequency-domain solution of the closed feedback loop at arbitrary probe
// detuning: per frequency, the linear system for (x_c, y_c, x, p) driven by
// the four inputs (x_c,in, y_c,in, f_th, y_add) is solved exactly, with the
// feedback force closed through the detected output quadrature.
namespace omsim::linsolve {

using cplx = std::complex<double>;

enum class SpectrumKind { displacement, momentum, heterodyne_output };

struct Spectrum {
    FrequencyGrid grid;
    std::vector<double> values;  // quanta * s  (two-sided, d omega / 2 pi measure)
    SpectrumKind kind = SpectrumKind::displacement;
};

// Input index order used throughout: 0 = x_c,in, 1 = y_c,in, 2 = f_th, 3 = y_add.
struct ClosedLoopTransfer {
    FrequencyGrid grid;
    OpmDevice device;
    ProbeTone probe;
    FeedbackFilter filter;
    // response[i] is the row-major 4x4 map (x_c, y_c, x, p) <- inputs at grid point i
    std::vector<std::array<cplx, 16>> response;
    // detected output quadratures x_det, y_det <- inputs (amplifier x-noise
    // enters the record as an additional flat term, handled at spectrum time)
    std::vector<std::array<cplx, 4>> out_x;
    std::vector<std::array<cplx, 4>> out_y;

    cplx coef(std::size_t i, int var, int input) const { return response[i][4 * var + input]; }
    cplx X_f(std::size_t i) const { return coef(i, 2, 2); }
    cplx X_bax(std::size_t i) const { return coef(i, 2, 0); }
    cplx X_inj(std::size_t i) const { return coef(i, 2, 1); }
    cplx X_n(std::size_t i) const { return coef(i, 2, 3); }
    cplx P_f(std::size_t i) const { return coef(i, 3, 2); }
};

ClosedLoopTransfer solve_closed_loop(const OpmDevice& dev, const ProbeTone& probe,
                                     const FeedbackFilter& filter,
                                     const FrequencyGrid& grid);

Spectrum displacement_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise);
Spectrum momentum_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise);

// Heterodyne output spectrum <a_out^dag a_out>[w] + 1/2 of the detected
// field, including the flat amplifier background and in-loop interference
// (squashing) terms. Positive frequencies map to the lab lower sideband.
Spectrum output_spectrum(const ClosedLoopTransfer& t, const NoiseBudget& noise);

// n_m from trapezoidal integration of (S_x + S_p)/2 over the grid.
// Requires the grid to span >= 20 linewidths beyond each mechanical peak.
double occupation_numeric(const Spectrum& s_x, const Spectrum& s_p);

struct StabilityResult {
    bool stable = false;
    double gamma_eff = 0;  // minus twice the pole's imaginary part
    double omega_eff = 0;  // pole's real part
};

// Locates the mechanical pole of the closed-loop characteristic function by
// Newton iteration in complex frequency.
StabilityResult stability(const OpmDevice& dev, const ProbeTone& probe,
                          const FeedbackFilter& filter);

// Closed-loop characteristic function continued to complex frequency; its
// zeros are the loop poles.
cplx characteristic(cplx omega, const OpmDevice& dev, const ProbeTone& probe,
                    const FeedbackFilter& filter);

// Bisection on A0 between gain_lo and gain_hi until |gamma_eff| < 1e-3 gamma.
// Throws if both bracket ends are on the same side of the boundary.
double find_stability_boundary(const OpmDevice& dev, const ProbeTone& probe,
                               double phase, double gain_lo, double gain_hi);

}  // namespace omsim::linsolve

#endif
