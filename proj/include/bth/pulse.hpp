#pragma once

#include <numbers>

#include "bth/model.hpp"

namespace bth {

/// Linearly polarized few-cycle pulse with a Tukey-tapered Gaussian
/// envelope. Time is measured from the pulse center, so the pulse occupies
/// [-duration()/2, +duration()/2] and the field is an even function of t.
struct LaserPulse {
    double e0 = 0.015;
    double omega_l = 0.1 / 7.5;
    int n_cycles = 60;
    double alpha = 0.0;  ///< polarization angle to the x-axis, radians
    double gaussian_fwhm_fraction = 0.5;
    double tukey_fraction = 0.1;

    [[nodiscard]] double period() const { return 2.0 * std::numbers::pi / omega_l; }
    [[nodiscard]] double duration() const { return n_cycles * period(); }
};

/// Throws InvalidInput naming the first offending field.
void validate(const LaserPulse& pulse);

/// Gaussian(t) * Tukey(t); exactly 0 for |t| >= duration/2, exactly 1 at t = 0.
double envelope(const LaserPulse& pulse, double t);

/// E0 * env(t) * cos(omega_l t) * (cos alpha, sin alpha).
Field field_at(const LaserPulse& pulse, double t);

}  // namespace bth
