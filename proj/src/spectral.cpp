#include "bth/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "bth/errors.hpp"

namespace bth {

namespace {

using cd = std::complex<double>;

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

class RealForwardFft {
public:
    explicit RealForwardFft(std::size_t n)
        : n_(n),
          in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        if (!in_ || !out_) throw std::bad_alloc();
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
        if (!plan_) throw NumericalFailure("fft: planner failed for length " + std::to_string(n));
    }
    ~RealForwardFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    RealForwardFft(const RealForwardFft&) = delete;
    RealForwardFft& operator=(const RealForwardFft&) = delete;

    double* input() { return in_.get(); }
    const fftw_complex* output() const { return out_.get(); }
    void execute() { fftw_execute(plan_); }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::unique_ptr<double, FftwFree> in_;
    std::unique_ptr<fftw_complex, FftwFree> out_;
    fftw_plan plan_ = nullptr;
};

double wrapped_arg(cd z) {
    const double a = std::arg(z);
    return a <= -std::numbers::pi ? std::numbers::pi : a;
}

double expectation(const Eigen::MatrixXcd& amps, Eigen::Index m, const Eigen::MatrixXd& op,
                   double& imag_residue) {
    cd acc = 0.0;
    const Eigen::Index n = op.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        const cd ci = std::conj(amps(m, i));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (op(i, j) != 0.0) acc += ci * op(i, j) * amps(m, j);
        }
    }
    imag_residue = std::abs(acc.imag());
    return acc.real();
}

}  // namespace

DipoleSeries dipole_series(const Trajectory& traj, const LevelSystem& system) {
    if (traj.amplitudes.cols() != system.n_levels())
        throw InvalidInput("dipole_series: trajectory has " + std::to_string(traj.amplitudes.cols()) +
                           " levels, system has " + std::to_string(system.n_levels()));
    if (static_cast<std::size_t>(traj.amplitudes.rows()) != traj.times.size())
        throw InvalidInput("dipole_series: amplitude rows do not match the time grid");

    DipoleSeries out;
    out.times = traj.times;
    out.dx.resize(traj.times.size());
    out.dy.resize(traj.times.size());
    const double scale =
        std::max({1.0, system.coupling_x.cwiseAbs().maxCoeff(), system.coupling_y.cwiseAbs().maxCoeff()});
    for (Eigen::Index m = 0; m < traj.amplitudes.rows(); ++m) {
        double rx = 0.0, ry = 0.0;
        out.dx[static_cast<std::size_t>(m)] = expectation(traj.amplitudes, m, system.coupling_x, rx);
        out.dy[static_cast<std::size_t>(m)] = expectation(traj.amplitudes, m, system.coupling_y, ry);
        const double tol = 1e-12 * scale * std::max(1.0, traj.amplitudes.row(m).squaredNorm());
        if (rx > tol || ry > tol)
            throw NumericalFailure("dipole_series: imaginary residue above 1e-12 at sample " +
                                   std::to_string(m));
    }
    return out;
}

std::vector<double> hann_window(std::size_t length) {
    std::vector<double> w(length, 0.0);
    if (length < 2) return w;
    const double half = 0.5 * static_cast<double>(length - 1);
    for (std::size_t m = 0; m < length; ++m) {
        const double c = std::cos(std::numbers::pi * (static_cast<double>(m) - half) /
                                  static_cast<double>(length - 1));
        w[m] = c * c;
    }
    w.front() = 0.0;
    w.back() = 0.0;
    return w;
}

double Spectrum::max_yield() const {
    return yield_total.empty() ? 0.0 : *std::max_element(yield_total.begin(), yield_total.end());
}

std::size_t Spectrum::nearest_bin(double omega) const {
    if (freqs.empty()) throw InvalidInput("spectrum: empty frequency grid");
    if (!(omega >= 0.0) || omega > nyquist())
        throw InvalidInput("spectrum: frequency " + std::to_string(omega) + " is above Nyquist (" +
                           std::to_string(nyquist()) + ")");
    const auto k = static_cast<std::size_t>(std::llround(omega / bin_width()));
    return std::min(k, freqs.size() - 1);
}

double Spectrum::axis_yield(Axis axis, std::size_t k) const {
    const double w2 = freqs[k] * freqs[k];
    return w2 * w2 * std::norm(component(axis)[k]);
}

Spectrum spectrum(const DipoleSeries& dipole, int pad_factor) {
    if (pad_factor < 1) throw InvalidInput("spectral.pad_factor: must be >= 1");
    const std::size_t len = dipole.times.size();
    if (len < 2 || dipole.dx.size() != len || dipole.dy.size() != len)
        throw InvalidInput("spectrum: dipole series is empty or inconsistent");
    const double dt = dipole.times[1] - dipole.times[0];
    for (std::size_t m = 1; m < len; ++m) {
        const double step = dipole.times[m] - dipole.times[m - 1];
        if (!(std::abs(step - dt) <= 1e-9 * std::abs(dt)))
            throw InvalidInput("spectrum: time grid is not uniform");
    }

    Spectrum spec;
    spec.pad_factor = pad_factor;
    spec.dt = dt;
    spec.n_fft = len * static_cast<std::size_t>(pad_factor);
    const std::size_t n_half = spec.n_fft / 2 + 1;
    spec.freqs.resize(n_half);
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(spec.n_fft) * dt);
    for (std::size_t k = 0; k < n_half; ++k) spec.freqs[k] = dw * static_cast<double>(k);

    const std::vector<double> window = hann_window(len);
    const double t0 = dipole.times.front();
    RealForwardFft fft(spec.n_fft);
    auto transform = [&](const std::vector<double>& d, std::vector<cd>& out) {
        double* in = fft.input();
        for (std::size_t m = 0; m < len; ++m) in[m] = window[m] * d[m];
        std::fill(in + len, in + spec.n_fft, 0.0);
        fft.execute();
        out.resize(n_half);
        const fftw_complex* f = fft.output();
        for (std::size_t k = 0; k < n_half; ++k) {
            // Shift the phase reference from the first sample to t = 0.
            out[k] = dt * std::polar(1.0, -spec.freqs[k] * t0) * cd(f[k][0], f[k][1]);
        }
    };
    transform(dipole.dx, spec.dx_tilde);
    transform(dipole.dy, spec.dy_tilde);

    spec.yield_total.resize(n_half);
    for (std::size_t k = 0; k < n_half; ++k) {
        const double w2 = spec.freqs[k] * spec.freqs[k];
        spec.yield_total[k] = w2 * w2 * (std::norm(spec.dx_tilde[k]) + std::norm(spec.dy_tilde[k]));
    }
    return spec;
}

double windowed_energy(const DipoleSeries& dipole) {
    const std::vector<double> w = hann_window(dipole.times.size());
    const double dt = dipole.times.size() > 1 ? dipole.times[1] - dipole.times[0] : 0.0;
    double acc = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        const double x = w[m] * dipole.dx[m];
        const double y = w[m] * dipole.dy[m];
        acc += x * x + y * y;
    }
    return acc * dt;
}

double spectral_energy(const Spectrum& spec) {
    const std::size_t n_half = spec.freqs.size();
    const bool even = spec.n_fft % 2 == 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < n_half; ++k) {
        const double p = std::norm(spec.dx_tilde[k]) + std::norm(spec.dy_tilde[k]);
        const bool unpaired = k == 0 || (even && k == n_half - 1);
        acc += unpaired ? p : 2.0 * p;
    }
    return acc / (static_cast<double>(spec.n_fft) * spec.dt);
}

BinaryPhase classify_phase(double phase, double threshold) {
    if (!(std::abs(std::sin(phase)) < threshold)) return BinaryPhase::invalid;
    return std::cos(phase) > 0.0 ? BinaryPhase::zero : BinaryPhase::pi;
}

HarmonicPhase harmonic_phase(const Spectrum& spec, double omega_l, int order, Axis axis,
                             double threshold) {
    if (order < 1) throw InvalidInput("harmonic_phase: order must be >= 1");
    const std::size_t k = spec.nearest_bin(order * omega_l);
    const double phase = wrapped_arg(spec.component(axis)[k]);
    return {phase, classify_phase(phase, threshold)};
}

Polarization polarization_from_amplitudes(cd a, cd b) {
    const double ma = std::abs(a), mb = std::abs(b);
    const double s0 = ma * ma + mb * mb;
    if (!(s0 > 0.0)) return {};
    const double delta = std::arg(b) - std::arg(a);
    Polarization p;
    p.alpha_n = 0.5 * std::atan2(2.0 * ma * mb * std::cos(delta), ma * ma - mb * mb);
    if (p.alpha_n <= -0.5 * std::numbers::pi) p.alpha_n += std::numbers::pi;
    const double s3 = std::clamp(2.0 * ma * mb * std::sin(delta) / s0, -1.0, 1.0);
    p.ellipticity = std::abs(std::tan(0.5 * std::asin(s3)));
    p.valid = true;
    return p;
}

Polarization polarization(const Spectrum& spec, double omega_l, int order, double noise_floor_rel) {
    if (order < 1) throw InvalidInput("polarization: order must be >= 1");
    const std::size_t k = spec.nearest_bin(order * omega_l);
    const double floor = noise_floor_rel * spec.max_yield();
    auto clears = [&](double v) { return v > 0.0 && v >= floor; };
    if (!clears(spec.axis_yield(Axis::x, k)) && !clears(spec.axis_yield(Axis::y, k))) return {};
    return polarization_from_amplitudes(spec.dx_tilde[k], spec.dy_tilde[k]);
}

std::vector<Peak> find_peaks(const Spectrum& spec, double lo, double hi, const PeakOptions& opt) {
    const auto first = std::lower_bound(spec.freqs.begin(), spec.freqs.end(), lo);
    const auto last = std::upper_bound(spec.freqs.begin(), spec.freqs.end(), hi);
    if (!(hi > lo) || last - first < 3) throw InvalidInput("find_peaks: empty frequency window");
    const auto b = static_cast<std::size_t>(first - spec.freqs.begin());
    const auto e = static_cast<std::size_t>(last - spec.freqs.begin());
    const std::vector<double>& y = spec.yield_total;

    const double ymax = *std::max_element(y.begin() + static_cast<long>(b), y.begin() + static_cast<long>(e));
    std::vector<Peak> peaks;
    if (!(ymax > 0.0)) return peaks;

    for (std::size_t k = b + 1; k + 1 < e; ++k) {
        if (!(y[k] > y[k - 1] && y[k] >= y[k + 1])) continue;
        if (y[k] < opt.min_rel_height * ymax) continue;
        double left = y[k];
        for (std::size_t j = k; j-- > b;) {
            if (y[j] > y[k]) break;
            left = std::min(left, y[j]);
        }
        double right = y[k];
        for (std::size_t j = k + 1; j < e; ++j) {
            if (y[j] > y[k]) break;
            right = std::min(right, y[j]);
        }
        const double base = std::max(left, right);
        if (base > 0.0 && y[k] / base < opt.min_prominence) continue;
        peaks.push_back({spec.freqs[k], y[k]});
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& p, const Peak& q) { return p.height > q.height; });
    return peaks;
}

HarmonicTable harmonic_table(const Spectrum& spec, double omega_l, const HarmonicOptions& opt) {
    if (opt.max_order < 1) throw InvalidInput("spectral.max_order: must be >= 1");
    const double ymax = spec.max_yield();
    const double floor = opt.yield_floor_rel * ymax;
    auto clears = [&](double v) { return ymax > 0.0 && v > 0.0 && v >= floor; };

    HarmonicTable table;
    for (int order = 1; order <= opt.max_order; order += 2) {
        const std::size_t k = spec.nearest_bin(order * omega_l);
        HarmonicRow row;
        row.order = order;
        row.intensity = spec.yield_total[k];
        row.valid = clears(row.intensity);
        row.phase_x = wrapped_arg(spec.dx_tilde[k]);
        row.phase_y = wrapped_arg(spec.dy_tilde[k]);
        if (clears(spec.axis_yield(Axis::x, k))) row.binary_x = classify_phase(row.phase_x, opt.phase_threshold);
        if (clears(spec.axis_yield(Axis::y, k))) row.binary_y = classify_phase(row.phase_y, opt.phase_threshold);
        const Polarization p = polarization_from_amplitudes(spec.dx_tilde[k], spec.dy_tilde[k]);
        row.alpha_n = p.alpha_n;
        row.ellipticity = p.ellipticity;
        table.push_back(row);
    }
    return table;
}

}  // namespace bth
