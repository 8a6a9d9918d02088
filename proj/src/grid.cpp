#include "omsim/grid.hpp"

#include <algorithm>
#include <cmath>

namespace omsim {

FrequencyGrid linear_grid(double lo, double hi, std::size_t n) {
    FrequencyGrid g;
    g.points.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        g.points[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.validate();
    return g;
}

FrequencyGrid default_grid(double omega_eff, double gamma_eff, const GridOptions& opt) {
    if (!(omega_eff > 0) || !(gamma_eff > 0))
        throw std::invalid_argument("default_grid needs positive omega_eff and gamma_eff");
    double half = opt.span_linewidths * gamma_eff;
    double outer = opt.max_offset > 0 ? opt.max_offset : 50.0 * omega_eff;

    std::vector<double> offsets;
    std::size_t nf = static_cast<std::size_t>(2.0 * opt.span_linewidths * opt.points_per_linewidth) + 1;
    for (std::size_t i = 0; i < nf; ++i)
        offsets.push_back(-half + 2.0 * half * static_cast<double>(i) / static_cast<double>(nf - 1));
    // log-spaced tails: outward to `outer`, inward down to near DC
    double inner = 0.999 * omega_eff;
    for (std::size_t i = 1; i <= opt.background_points; ++i) {
        double t = static_cast<double>(i) / static_cast<double>(opt.background_points);
        offsets.push_back(half * std::pow(outer / half, t));
        offsets.push_back(-half * std::pow(inner / half, t));
    }

    std::vector<double> pts;
    pts.reserve(2 * offsets.size());
    for (double o : offsets) {
        pts.push_back(omega_eff + o);
        pts.push_back(-(omega_eff + o));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-6; }),
              pts.end());

    FrequencyGrid g;
    g.points = std::move(pts);
    g.validate();
    return g;
}

}  // namespace omsim
