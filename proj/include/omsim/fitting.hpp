#ifndef OMSIM_FITTING_HPP
#define OMSIM_FITTING_HPP

#include <string>
#include <vector>

#include "omsim/linsolve.hpp"
#include "omsim/types.hpp"

// Data-analysis layer: Lorentzian peak fits, linear power/gain calibrations,
// and the one-parameter bath-occupation fit against the full loop model.
namespace omsim::fitting {

struct LorentzianFit {
    double center = 0;    // rad/s
    double fwhm = 0;      // rad/s
    double area = 0;      // integrated above baseline (quanta); negative for dips
    double baseline = 0;  // quanta * s
    double goodness = 0;  // rms residual relative to peak height
    double center_err = 0, fwhm_err = 0, area_err = 0;  // 1 sigma
    bool dip = false;
};

// Least-squares fit of baseline + (area/pi)(fwhm/2)/((w-center)^2+(fwhm/2)^2)
// over grid points inside [window_lo, window_hi]. Dips are fitted with
// negative area and flagged.
LorentzianFit fit_lorentzian(const linsolve::Spectrum& spec, double window_lo,
                             double window_hi);

struct PowerCalibration {
    double P_coeff = 0;          // gamma_opt per unit power, fitted through origin
    std::vector<double> G_rsb;   // coupling at each supplied power
};

// Linear fit gamma_opt = P_coeff * P through the origin, then
// G_rsb = (1/2) sqrt(P_coeff * P * kappa * (1 + (kappa/4 omega_m)^2)).
PowerCalibration calibrate_power(const std::vector<double>& powers,
                                 const std::vector<double>& gamma_opt,
                                 const OpmDevice& dev);

// Coupling at detuning Delta from the red-sideband value, scaled by the
// cavity susceptibility magnitude ratio |chi_c(Delta)| / |chi_c(-omega_m)|.
double detuning_transfer(double G_rsb, double detuning, const OpmDevice& dev);

struct GainCalibration {
    double L_coeff = 0;  // gamma_fb per unit experimental gain
};

// gamma_fb = L_coeff * g fitted through (0, gamma); requires >= 2 points
// with g > 0.
GainCalibration calibrate_gain(const std::vector<double>& gains,
                               const std::vector<double>& linewidths,
                               double gamma);

// A0 for a given electronic gain setting: A0 = L G_el sqrt(k^2+4w^2)/(4G).
double gain_to_A0(const GainCalibration& cal, double electronic_gain, double G,
                  const OpmDevice& dev);

// Blue-sideband variant, inverting the optimal-phase feedback damping form.
double gain_to_A0_bsb(const GainCalibration& cal, double electronic_gain, double G,
                      const OpmDevice& dev);

// One-dimensional least squares over the bath occupation: the model spectrum
// is linear in n_m^T, so the estimate is closed-form. freq_offset (rad/s) is
// an explicit zero adjustment added to the model grid.
double fit_bath_occupation(const linsolve::Spectrum& measured, const OpmDevice& dev,
                           const ProbeTone& probe, const FeedbackFilter& filter,
                           double amplifier_noise, double freq_offset = 0);

// Reads the CSV spectrum format written by the command-line tool
// (# metadata lines, then freq_hz,value_quanta rows).
linsolve::Spectrum read_spectrum_csv(const std::string& path);

}  // namespace omsim::fitting

#endif
