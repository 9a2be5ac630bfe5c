#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bth/scans.hpp"

namespace bth {

/// Pulse parameters as they appear in configuration files. The polarization
/// angle is kept in degrees so that a configuration survives a JSON round trip
/// bit for bit.
struct PulseParams {
    double e0 = 0.015;
    double omega_l = 0.1 / 7.5;
    int n_cycles = 60;
    double alpha_deg = 0.0;
    double gaussian_fwhm_fraction = 0.5;
    double tukey_fraction = 0.1;

    [[nodiscard]] LaserPulse laser_pulse() const;
};

struct ScanSettings {
    ScanKind kind = ScanKind::frequency_ratio;
    std::vector<double> values;  ///< explicit grid; empty means start/stop/step or the default
    std::optional<double> start;
    std::optional<double> stop;
    std::optional<double> step;

    [[nodiscard]] std::vector<double> resolved_grid() const;
};

struct RunConfig {
    TargetParams target;
    std::string custom_system_file;
    PulseParams pulse;
    IntegratorConfig integrator;
    SpectralConfig spectral;
    std::optional<ScanSettings> scan;
    std::string out_dir = "out";
    int workers = 1;
};

/// Parses a configuration object. A provenance file written by the tool
/// (an object with "tool" and "config" keys) is accepted as well. Unknown keys
/// and type mismatches raise InvalidInput with the JSON field path.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

/// Fully resolved configuration; custom systems are embedded inline.
nlohmann::json config_to_json(const RunConfig& cfg);

/// Loads the custom matrix file if one is named and checks every field
/// against its module's preconditions. Throws InvalidInput.
void resolve_and_validate(RunConfig& cfg, bool for_scan);

ScanSpec make_scan_spec(const RunConfig& cfg);

nlohmann::json level_system_to_json(const LevelSystem& system);
LevelSystem level_system_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace bth
