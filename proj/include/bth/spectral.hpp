#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "bth/model.hpp"
#include "bth/propagator.hpp"

namespace bth {

enum class Axis { x, y };

/// Dipole expectation values <C|coupling|C> on the trajectory grid.
struct DipoleSeries {
    std::vector<double> times;
    std::vector<double> dx;
    std::vector<double> dy;
};

/// Throws InvalidInput when the trajectory width does not match the system,
/// NumericalFailure when an expectation value carries an imaginary residue
/// above 1e-12.
DipoleSeries dipole_series(const Trajectory& trajectory, const LevelSystem& system);

/// One-sided windowed Fourier transform of a dipole series and its
/// omega^4-weighted emission yield.
///
/// D~(w) = dt * sum_m hann_m D(t_m) exp(-i w t_m), evaluated on the padded FFT
/// grid w_k = 2 pi k / (n_fft dt), k = 0..n_fft/2. The time origin is the pulse
/// center, so an even dipole gives a real spectrum.
struct Spectrum {
    std::vector<double> freqs;
    std::vector<std::complex<double>> dx_tilde;
    std::vector<std::complex<double>> dy_tilde;
    std::vector<double> yield_total;
    int pad_factor = 1;
    std::size_t n_fft = 0;
    double dt = 0.0;

    [[nodiscard]] double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
    [[nodiscard]] double nyquist() const { return freqs.empty() ? 0.0 : freqs.back(); }
    [[nodiscard]] double max_yield() const;
    /// Index of the grid frequency nearest to omega. Throws InvalidInput above Nyquist.
    [[nodiscard]] std::size_t nearest_bin(double omega) const;
    [[nodiscard]] const std::vector<std::complex<double>>& component(Axis axis) const {
        return axis == Axis::x ? dx_tilde : dy_tilde;
    }
    /// omega^4 |D~_axis|^2 at bin k.
    [[nodiscard]] double axis_yield(Axis axis, std::size_t k) const;
};

/// Symmetric Hann window over the whole record, zero at both ends.
std::vector<double> hann_window(std::size_t length);

Spectrum spectrum(const DipoleSeries& dipole, int pad_factor = 8);

/// dt * sum_m |hann_m D(t_m)|^2, summed over both axes.
double windowed_energy(const DipoleSeries& dipole);

/// (1 / 2 pi) * integral |D~(w)|^2 dw over the full two-sided spectrum,
/// reconstructed from the stored one-sided half.
double spectral_energy(const Spectrum& spec);

enum class BinaryPhase { zero, pi, invalid };

struct HarmonicPhase {
    double phase = 0.0;  ///< arg D~ in (-pi, pi]
    BinaryPhase binary = BinaryPhase::invalid;
};

/// Classifies an angle as 0 or pi when |sin phi| < threshold.
BinaryPhase classify_phase(double phase, double threshold = 0.1);

HarmonicPhase harmonic_phase(const Spectrum& spec, double omega_l, int order, Axis axis,
                             double threshold = 0.1);

struct Polarization {
    double alpha_n = 0.0;     ///< ellipse orientation to the x-axis, (-pi/2, pi/2]
    double ellipticity = 0.0; ///< minor/major axis ratio in [0, 1]
    bool valid = false;
};

/// Polarization ellipse of the field Re[(a, b) e^{i w t}].
Polarization polarization_from_amplitudes(std::complex<double> a, std::complex<double> b);

/// Polarization at harmonic `order`. Invalid when both axis yields fall below
/// noise_floor_rel times the record's maximum yield.
Polarization polarization(const Spectrum& spec, double omega_l, int order,
                          double noise_floor_rel = 1e-6);

struct Peak {
    double freq = 0.0;
    double height = 0.0;
};

struct PeakOptions {
    double min_rel_height = 1e-2;   ///< relative to the largest yield inside the window
    double min_prominence = 2.0;    ///< height / higher base, bases searched inside the window
};

/// Local maxima of yield_total inside [lo, hi], tallest first.
std::vector<Peak> find_peaks(const Spectrum& spec, double lo, double hi, const PeakOptions& opt = {});

struct HarmonicRow {
    int order = 0;
    double intensity = 0.0;
    double phase_x = 0.0;
    double phase_y = 0.0;
    BinaryPhase binary_x = BinaryPhase::invalid;
    BinaryPhase binary_y = BinaryPhase::invalid;
    double alpha_n = 0.0;
    double ellipticity = 0.0;
    bool valid = false;  ///< intensity above the yield floor
};

struct HarmonicOptions {
    int max_order = 17;
    double yield_floor_rel = 1e-6;
    double phase_threshold = 0.1;
};

using HarmonicTable = std::vector<HarmonicRow>;

/// One row per odd order up to max_order. A binary phase is reported only
/// when that axis' own yield clears the floor and the 0/pi classification
/// succeeds. Raw phases and the polarization ellipse are always filled in;
/// `valid` tells whether the row is above the noise floor.
HarmonicTable harmonic_table(const Spectrum& spec, double omega_l, const HarmonicOptions& opt = {});

}  // namespace bth
