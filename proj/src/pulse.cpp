#include "bth/pulse.hpp"

#include <cmath>

#include "bth/errors.hpp"

namespace bth {

void validate(const LaserPulse& p) {
    if (!std::isfinite(p.e0) || p.e0 < 0.0) throw InvalidInput("pulse.e0: must be finite and >= 0");
    if (!std::isfinite(p.omega_l) || !(p.omega_l > 0.0))
        throw InvalidInput("pulse.omega_l: must be finite and > 0");
    if (p.n_cycles < 1) throw InvalidInput("pulse.n_cycles: must be >= 1");
    if (!std::isfinite(p.alpha)) throw InvalidInput("pulse.alpha: must be finite");
    if (!(p.gaussian_fwhm_fraction > 0.0 && p.gaussian_fwhm_fraction <= 1.0))
        throw InvalidInput("pulse.gaussian_fwhm_fraction: must lie in (0, 1]");
    if (!(p.tukey_fraction >= 0.0 && p.tukey_fraction <= 1.0))
        throw InvalidInput("pulse.tukey_fraction: must lie in [0, 1]");
}

double envelope(const LaserPulse& p, double t) {
    const double total = p.duration();
    const double half = 0.5 * total;
    const double at = std::abs(t);
    if (!(at < half)) return 0.0;

    const double fwhm = p.gaussian_fwhm_fraction * total;
    const double gauss = std::exp(-4.0 * std::numbers::ln2 * at * at / (fwhm * fwhm));

    // Tukey taper, written in terms of the distance to the nearest edge so the
    // window is exactly even in t.
    double taper = 1.0;
    const double edge = (half - at) / total;
    const double ramp = 0.5 * p.tukey_fraction;
    if (edge < ramp) taper = 0.5 * (1.0 - std::cos(std::numbers::pi * edge / ramp));
    return gauss * taper;
}

Field field_at(const LaserPulse& p, double t) {
    const double amp = p.e0 * envelope(p, t) * std::cos(p.omega_l * t);
    return {amp * std::cos(p.alpha), amp * std::sin(p.alpha)};
}

}  // namespace bth
