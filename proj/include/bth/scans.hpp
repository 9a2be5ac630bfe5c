#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bth/model.hpp"
#include "bth/propagator.hpp"
#include "bth/pulse.hpp"
#include "bth/spectral.hpp"

namespace bth {

enum class TargetKind { tls, four_level, custom };

struct TargetParams {
    TargetKind kind = TargetKind::tls;
    double omega10 = 0.1;
    double d = -1.5;
    double omega21x = 0.1;
    double omega30y = 0.38 / 3.0;  // 0.12666...
    bool normalize_initial_state = false;
    std::optional<LevelSystem> custom;
};

LevelSystem build_target(const TargetParams& target);

struct SpectralConfig {
    int pad_factor = 8;
    HarmonicOptions harmonics;
    double yield_resolution = 0.02;  ///< cell width of the downsampled yield curve, in units of omega_l
    double yield_max_harmonic = 20.0;
};

void validate(const SpectralConfig& cfg, const IntegratorConfig& integrator);

struct YieldSample {
    double harmonic = 0.0;  ///< omega / omega_l at the cell center
    double yield = 0.0;     ///< largest yield_total inside the cell
};

/// Peak-preserving downsampling of yield_total onto cells of width
/// `resolution` (in harmonic units) centered on 0, resolution, 2*resolution, ...
std::vector<YieldSample> downsample_yield(const Spectrum& spec, double omega_l, double resolution,
                                          double max_harmonic);

/// Everything produced by one propagate -> dipole -> spectrum pass.
struct RunResult {
    LevelSystem system;
    LaserPulse pulse;
    Trajectory trajectory;
    DipoleSeries dipole;
    Spectrum spectrum;
    HarmonicTable table;
};

RunResult run_pipeline(const TargetParams& target, const LaserPulse& pulse,
                       const IntegratorConfig& integrator, const SpectralConfig& spectral);

enum class ScanKind { field_strength, frequency_ratio, polarization_angle };

std::string to_string(ScanKind kind);
std::optional<ScanKind> parse_scan_kind(const std::string& name);
/// Column label used in scan outputs: "e0", "ratio" or "alpha_deg".
std::string param_name(ScanKind kind);

/// Default grids: E0 in {0.005, 0.01, 0.015, 0.02}; omega10/omega_l from 1 to
/// 17 in steps of 0.05; alpha from 0 to 90 degrees in steps of 1.
std::vector<double> default_grid(ScanKind kind);

/// start, start + step, ... up to stop (inclusive within rounding), each value
/// rounded to 12 decimals so that e.g. 7.5 lands exactly on 7.5.
std::vector<double> linspace_step(double start, double stop, double step);

struct ScanSpec {
    ScanKind kind = ScanKind::frequency_ratio;
    std::vector<double> grid;
    TargetParams target;
    LaserPulse pulse;
    IntegratorConfig integrator;
    SpectralConfig spectral;
};

void validate(const ScanSpec& spec);

/// Pulse used at one grid value (ratio varies omega_l at fixed omega10,
/// polarization values are degrees).
LaserPulse pulse_for(const ScanSpec& spec, double value);

struct ScanPoint {
    double value = 0.0;
    double norm_drift = 0.0;
    std::vector<YieldSample> yield_curve;
    HarmonicTable table;
};

struct ScanResult {
    ScanKind kind = ScanKind::frequency_ratio;
    std::vector<ScanPoint> points;  ///< ascending in value
};

struct ScanOptions {
    int workers = 1;
    /// Points already computed by an earlier run; their grid values are skipped.
    std::vector<ScanPoint> completed;
    /// Called on the calling thread, once per newly computed point, in
    /// completion order.
    std::function<void(const ScanPoint&)> on_point;
    /// Optional permutation of grid indices fixing the dispatch order.
    std::vector<std::size_t> dispatch_order;
};

ScanPoint evaluate_point(const ScanSpec& spec, double value);

/// Runs every missing grid point on `workers` threads pulling from a shared
/// queue. The first failure stops dispatch and is rethrown, prefixed with the
/// offending parameter value, after in-flight points finish.
ScanResult run_scan(const ScanSpec& spec, const ScanOptions& options = {});

ScanResult scan_field_strength(ScanSpec spec, const ScanOptions& options = {});
ScanResult scan_frequency_ratio(ScanSpec spec, const ScanOptions& options = {});
ScanResult scan_polarization(ScanSpec spec, const ScanOptions& options = {});

}  // namespace bth
