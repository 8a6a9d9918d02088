#ifndef OMSIM_GRID_HPP
#define OMSIM_GRID_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace omsim {

// Strictly increasing set of angular frequencies. Both sidebands are
// negative/positive frequencies of the rotating frame.
struct FrequencyGrid {
    std::vector<double> points;

    std::size_t size() const { return points.size(); }
    double front() const { return points.front(); }
    double back() const { return points.back(); }

    void validate() const {
        if (points.size() < 2)
            throw std::invalid_argument("frequency grid needs at least 2 points");
        for (std::size_t i = 1; i < points.size(); ++i)
            if (!(points[i] > points[i - 1]))
                throw std::invalid_argument("frequency grid must be strictly increasing");
    }
};

struct GridOptions {
    double span_linewidths = 40;     // fine window half-span around each peak
    double points_per_linewidth = 50;
    std::size_t background_points = 300;  // log-spaced offsets per tail
    double max_offset = 0;           // outer reach from each peak; 0 = auto
};

// Fine windows around +-omega_eff with log-spaced tails reaching inward to
// DC and outward to max_offset, adequate for 0.1%-level Lorentzian
// quadrature.
FrequencyGrid default_grid(double omega_eff, double gamma_eff,
                           const GridOptions& opt = {});

// Uniform grid on [lo, hi].
FrequencyGrid linear_grid(double lo, double hi, std::size_t n);

}  // namespace omsim

#endif
