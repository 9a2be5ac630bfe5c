#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "bth/config.hpp"
#include "bth/scans.hpp"
#include "bth/spectral.hpp"

namespace bth {

inline constexpr const char* kToolName = "bthsim";
inline constexpr const char* kToolVersion = "1.0.0";

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

/// 17 significant digits in scientific notation.
std::string format_double(double v);

std::string binary_phase_label(BinaryPhase b);  ///< "0", "pi" or "invalid"

// CSV writers. Column sets are fixed:
//   dipole.csv           t,dx,dy
//   spectrum.csv         omega_au,omega_over_wl,abs_dx,arg_dx,abs_dy,arg_dy,yield
//   harmonics.csv        order,intensity,phase_x,phase_x_binary,phase_y,phase_y_binary,alpha_n_deg,ellipticity,valid
//   scan_yield.csv       param_name,param_value,omega_over_wl,yield
//   scan_harmonics.csv   param_name,param_value,order,intensity,phase_x,phase_y,alpha_n_deg,ellipticity,valid
void write_dipole_csv(std::ostream& os, const DipoleSeries& dipole);
void write_spectrum_csv(std::ostream& os, const Spectrum& spec, double omega_l);
void write_harmonics_csv(std::ostream& os, const HarmonicTable& table);
void write_scan_yield_csv(std::ostream& os, const ScanResult& result);
void write_scan_harmonics_csv(std::ostream& os, const ScanResult& result);

nlohmann::json scan_point_to_json(const ScanPoint& point);
ScanPoint scan_point_from_json(const nlohmann::json& j);

/// Resumable record of finished scan points: a header line holding the
/// resolved configuration, then one JSON object per completed point.
class ScanManifest {
public:
    explicit ScanManifest(std::filesystem::path path) : path_(std::move(path)) {}

    /// Points recorded for exactly this configuration; empty when the file is
    /// missing, unreadable or was written for a different configuration.
    [[nodiscard]] std::vector<ScanPoint> load(const nlohmann::json& config) const;
    /// Starts a new manifest unless one for the same configuration exists.
    void open(const nlohmann::json& config, bool keep_existing);
    void append(const ScanPoint& point) const;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// UTC timestamp, ISO 8601.
std::string utc_now();

/// Single propagation with dipole.csv, spectrum.csv, harmonics.csv and
/// run.json written to cfg.out_dir. Returns an ExitCode; diagnostics go to `log`.
int cmd_run(RunConfig cfg, std::ostream& log);

/// Parameter scan with scan_yield.csv, scan_harmonics.csv, scan.json and a
/// scan_manifest.jsonl that lets an interrupted or failed scan resume.
int cmd_scan(RunConfig cfg, std::ostream& log);

}  // namespace bth
