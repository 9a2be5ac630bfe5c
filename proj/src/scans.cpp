#include "bth/scans.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "bth/errors.hpp"

namespace bth {

LevelSystem build_target(const TargetParams& t) {
    switch (t.kind) {
        case TargetKind::tls:
            return build_tls(t.omega10, t.d);
        case TargetKind::four_level:
            return build_four_level(t.omega21x, t.omega30y, t.d, t.normalize_initial_state);
        case TargetKind::custom:
            if (!t.custom) throw InvalidInput("target.custom: no level system supplied");
            return *t.custom;
    }
    throw InvalidInput("target.kind: unknown target");
}

void validate(const SpectralConfig& cfg, const IntegratorConfig& integrator) {
    if (cfg.pad_factor < 1) throw InvalidInput("spectral.pad_factor: must be >= 1");
    if (cfg.harmonics.max_order < 1) throw InvalidInput("spectral.max_order: must be >= 1");
    if (!(cfg.harmonics.yield_floor_rel >= 0.0))
        throw InvalidInput("spectral.yield_floor: must be >= 0");
    if (!(cfg.harmonics.phase_threshold > 0.0 && cfg.harmonics.phase_threshold <= 1.0))
        throw InvalidInput("spectral.binary_phase_threshold: must lie in (0, 1]");
    if (!(cfg.yield_resolution > 0.0)) throw InvalidInput("spectral.yield_resolution: must be > 0");
    if (!(cfg.yield_max_harmonic > 0.0))
        throw InvalidInput("spectral.yield_max_harmonic: must be > 0");
    // Nyquist (samples_per_cycle / 2 harmonics) must cover 3x the highest reported order.
    if (integrator.samples_per_cycle < 6 * cfg.harmonics.max_order)
        throw InvalidInput("integrator.samples_per_cycle: must be at least 6 x spectral.max_order");
    if (2.0 * cfg.yield_max_harmonic > integrator.samples_per_cycle)
        throw InvalidInput("spectral.yield_max_harmonic: above the Nyquist limit of the output grid");
}

std::vector<YieldSample> downsample_yield(const Spectrum& spec, double omega_l, double resolution,
                                          double max_harmonic) {
    const auto n_cells = static_cast<std::size_t>(std::floor(max_harmonic / resolution + 1e-9)) + 1;
    std::vector<YieldSample> out(n_cells);
    std::vector<bool> touched(n_cells, false);
    for (std::size_t c = 0; c < n_cells; ++c) out[c].harmonic = static_cast<double>(c) * resolution;

    for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
        const double h = spec.freqs[k] / omega_l;
        const auto c = static_cast<long>(std::floor(h / resolution + 0.5));
        if (c < 0 || static_cast<std::size_t>(c) >= n_cells) continue;
        auto& cell = out[static_cast<std::size_t>(c)];
        if (!touched[static_cast<std::size_t>(c)] || spec.yield_total[k] > cell.yield)
            cell.yield = spec.yield_total[k];
        touched[static_cast<std::size_t>(c)] = true;
    }
    // Cells narrower than a frequency bin fall back to the nearest bin.
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (touched[c]) continue;
        const double w = out[c].harmonic * omega_l;
        if (w <= spec.nyquist()) out[c].yield = spec.yield_total[spec.nearest_bin(w)];
    }
    return out;
}

RunResult run_pipeline(const TargetParams& target, const LaserPulse& pulse,
                       const IntegratorConfig& integrator, const SpectralConfig& spectral) {
    validate(pulse);
    validate(integrator);
    validate(spectral, integrator);
    RunResult r{build_target(target), pulse, {}, {}, {}, {}};
    r.trajectory = propagate(r.system, pulse, integrator);
    r.dipole = dipole_series(r.trajectory, r.system);
    r.spectrum = spectrum(r.dipole, spectral.pad_factor);
    r.table = harmonic_table(r.spectrum, pulse.omega_l, spectral.harmonics);
    return r;
}

std::string to_string(ScanKind kind) {
    switch (kind) {
        case ScanKind::field_strength: return "field_strength";
        case ScanKind::frequency_ratio: return "frequency_ratio";
        case ScanKind::polarization_angle: return "polarization_angle";
    }
    return "unknown";
}

std::optional<ScanKind> parse_scan_kind(const std::string& name) {
    if (name == "field_strength") return ScanKind::field_strength;
    if (name == "frequency_ratio") return ScanKind::frequency_ratio;
    if (name == "polarization_angle" || name == "polarization") return ScanKind::polarization_angle;
    return std::nullopt;
}

std::string param_name(ScanKind kind) {
    switch (kind) {
        case ScanKind::field_strength: return "e0";
        case ScanKind::frequency_ratio: return "ratio";
        case ScanKind::polarization_angle: return "alpha_deg";
    }
    return "value";
}

std::vector<double> linspace_step(double start, double stop, double step) {
    if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start)
        throw InvalidInput("scan.grid: need finite start <= stop and step > 0");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) {
        const double v = start + static_cast<double>(i) * step;
        out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
}

std::vector<double> default_grid(ScanKind kind) {
    switch (kind) {
        case ScanKind::field_strength: return {0.005, 0.010, 0.015, 0.020};
        case ScanKind::frequency_ratio: return linspace_step(1.0, 17.0, 0.05);
        case ScanKind::polarization_angle: return linspace_step(0.0, 90.0, 1.0);
    }
    return {};
}

void validate(const ScanSpec& spec) {
    if (spec.grid.empty()) throw InvalidInput("scan.grid: must not be empty");
    for (double v : spec.grid)
        if (!std::isfinite(v)) throw InvalidInput("scan.grid: non-finite value");
    const bool up = spec.grid.size() < 2 || spec.grid[1] > spec.grid[0];
    for (std::size_t i = 1; i < spec.grid.size(); ++i) {
        if (up ? !(spec.grid[i] > spec.grid[i - 1]) : !(spec.grid[i] < spec.grid[i - 1]))
            throw InvalidInput("scan.grid: values must be strictly monotone");
    }
    switch (spec.kind) {
        case ScanKind::field_strength:
            if (spec.target.kind == TargetKind::four_level)
                throw InvalidInput("target.kind: field_strength scans drive a two-level or custom target");
            break;
        case ScanKind::frequency_ratio:
            if (spec.target.kind != TargetKind::tls)
                throw InvalidInput("target.kind: frequency_ratio scans require the tls target");
            for (double v : spec.grid)
                if (!(v > 0.0)) throw InvalidInput("scan.grid: ratios must be positive");
            break;
        case ScanKind::polarization_angle:
            if (spec.target.kind == TargetKind::tls)
                throw InvalidInput("target.kind: polarization scans need a target with a y coupling");
            break;
    }
    build_target(spec.target);
    validate(spec.integrator);
    validate(spec.spectral, spec.integrator);
    for (double v : {spec.grid.front(), spec.grid.back()}) validate(pulse_for(spec, v));
}

LaserPulse pulse_for(const ScanSpec& spec, double value) {
    LaserPulse p = spec.pulse;
    switch (spec.kind) {
        case ScanKind::field_strength: p.e0 = value; break;
        case ScanKind::frequency_ratio: p.omega_l = spec.target.omega10 / value; break;
        case ScanKind::polarization_angle: p.alpha = value * std::numbers::pi / 180.0; break;
    }
    return p;
}

ScanPoint evaluate_point(const ScanSpec& spec, double value) {
    const LaserPulse pulse = pulse_for(spec, value);
    RunResult r = run_pipeline(spec.target, pulse, spec.integrator, spec.spectral);
    ScanPoint pt;
    pt.value = value;
    pt.norm_drift = r.trajectory.norm_drift;
    pt.yield_curve = downsample_yield(r.spectrum, pulse.omega_l, spec.spectral.yield_resolution,
                                      spec.spectral.yield_max_harmonic);
    pt.table = std::move(r.table);
    return pt;
}

namespace {

struct Outcome {
    std::size_t index = 0;
    std::optional<ScanPoint> point;
    std::exception_ptr error;
};

[[noreturn]] void rethrow_for(const ScanSpec& spec, double value, std::exception_ptr err) {
    std::ostringstream where;
    where.precision(17);
    where << "scan point " << param_name(spec.kind) << "=" << value << ": ";
    try {
        std::rethrow_exception(err);
    } catch (const InvalidInput& e) {
        throw InvalidInput(where.str() + e.what());
    } catch (const std::exception& e) {
        throw NumericalFailure(where.str() + e.what());
    }
}

}  // namespace

ScanResult run_scan(const ScanSpec& spec, const ScanOptions& options) {
    validate(spec);
    if (options.workers < 1) throw InvalidInput("workers: must be >= 1");

    const std::size_t n = spec.grid.size();
    std::vector<std::optional<ScanPoint>> slots(n);
    for (const ScanPoint& done : options.completed) {
        const auto it = std::find(spec.grid.begin(), spec.grid.end(), done.value);
        if (it != spec.grid.end()) slots[static_cast<std::size_t>(it - spec.grid.begin())] = done;
    }

    std::vector<std::size_t> order = options.dispatch_order;
    if (order.empty()) {
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
    } else {
        std::vector<std::size_t> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (sorted.size() != n || sorted[i] != i)
                throw InvalidInput("dispatch_order: must be a permutation of the grid indices");
    }
    std::vector<std::size_t> pending;
    for (std::size_t i : order)
        if (!slots[i]) pending.push_back(i);

    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> stop{false};
    std::mutex mtx;
    std::condition_variable cv;
    std::deque<Outcome> inbox;
    std::size_t exited = 0;

    auto worker = [&] {
        for (;;) {
            const std::size_t slot = stop.load() ? pending.size() : cursor.fetch_add(1);
            if (slot >= pending.size()) break;
            Outcome out;
            out.index = pending[slot];
            try {
                out.point = evaluate_point(spec, spec.grid[out.index]);
            } catch (...) {
                out.error = std::current_exception();
                stop.store(true);
            }
            {
                std::lock_guard lock(mtx);
                inbox.push_back(std::move(out));
            }
            cv.notify_one();
        }
        {
            std::lock_guard lock(mtx);
            ++exited;
        }
        cv.notify_one();
    };

    const auto n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(options.workers), pending.size());
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);

    // The calling thread drains results so that on_point never runs concurrently.
    std::optional<Outcome> failure;
    for (;;) {
        std::unique_lock lock(mtx);
        cv.wait(lock, [&] { return !inbox.empty() || exited == n_threads; });
        if (inbox.empty()) break;
        Outcome out = std::move(inbox.front());
        inbox.pop_front();
        lock.unlock();
        if (out.error) {
            if (!failure) failure = std::move(out);
            continue;
        }
        if (options.on_point) options.on_point(*out.point);
        slots[out.index] = std::move(out.point);
    }
    threads.clear();
    if (failure) rethrow_for(spec, spec.grid[failure->index], failure->error);

    ScanResult result;
    result.kind = spec.kind;
    result.points.reserve(n);
    for (auto& s : slots) result.points.push_back(std::move(*s));
    std::sort(result.points.begin(), result.points.end(),
              [](const ScanPoint& a, const ScanPoint& b) { return a.value < b.value; });
    return result;
}

ScanResult scan_field_strength(ScanSpec spec, const ScanOptions& options) {
    spec.kind = ScanKind::field_strength;
    if (spec.grid.empty()) spec.grid = default_grid(spec.kind);
    return run_scan(spec, options);
}

ScanResult scan_frequency_ratio(ScanSpec spec, const ScanOptions& options) {
    spec.kind = ScanKind::frequency_ratio;
    if (spec.grid.empty()) spec.grid = default_grid(spec.kind);
    return run_scan(spec, options);
}

ScanResult scan_polarization(ScanSpec spec, const ScanOptions& options) {
    spec.kind = ScanKind::polarization_angle;
    if (spec.grid.empty()) spec.grid = default_grid(spec.kind);
    return run_scan(spec, options);
}

}  // namespace bth
