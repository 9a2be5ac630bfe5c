// bthsim: command-line front end for single runs and parameter scans.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bth/config.hpp"
#include "bth/errors.hpp"
#include "bth/io.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<std::string> target;
    std::optional<std::string> custom_system_file;
    std::optional<double> e0;
    std::optional<double> omega_l;
    std::optional<double> ratio;
    std::optional<int> n_cycles;
    std::optional<double> alpha_deg;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    std::optional<int> samples_per_cycle;
    std::optional<int> pad_factor;
    std::optional<int> max_order;

    std::optional<std::string> kind;
    std::vector<double> values;
    std::optional<double> start;
    std::optional<double> stop;
    std::optional<double> step;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON configuration file");
    cmd->add_option("-o,--out", o.out, "Output directory");
    cmd->add_option("-j,--workers", o.workers, "Worker threads (scan only)");
    cmd->add_option("--target", o.target, "tls, four_level or custom")
        ->check(CLI::IsMember({"tls", "four_level", "custom"}));
    cmd->add_option("--custom-system", o.custom_system_file, "JSON file with a custom level system");
    cmd->add_option("--e0", o.e0, "Peak field amplitude (a.u.)");
    cmd->add_option("--omega-l", o.omega_l, "Laser frequency (a.u.)");
    cmd->add_option("--ratio", o.ratio, "Set the laser frequency to omega10 / ratio");
    cmd->add_option("--n-cycles", o.n_cycles, "Optical cycles in the pulse");
    cmd->add_option("--alpha-deg", o.alpha_deg, "Polarization angle from the x axis (degrees)");
    cmd->add_option("--rel-tol", o.rel_tol, "Integrator relative tolerance");
    cmd->add_option("--abs-tol", o.abs_tol, "Integrator absolute tolerance");
    cmd->add_option("--samples-per-cycle", o.samples_per_cycle, "Dipole samples per optical cycle");
    cmd->add_option("--pad-factor", o.pad_factor, "Zero-padding factor for the spectrum");
    cmd->add_option("--max-order", o.max_order, "Highest odd harmonic in the table");
}

bth::RunConfig resolve_config(const Overrides& o, bool scan) {
    bth::RunConfig cfg = o.config_path.empty() ? bth::RunConfig{} : bth::load_config_file(o.config_path);
    if (o.out) cfg.out_dir = *o.out;
    if (o.workers) cfg.workers = *o.workers;
    if (o.target) {
        if (*o.target == "tls") cfg.target.kind = bth::TargetKind::tls;
        else if (*o.target == "four_level") cfg.target.kind = bth::TargetKind::four_level;
        else cfg.target.kind = bth::TargetKind::custom;
    }
    if (o.custom_system_file) cfg.custom_system_file = *o.custom_system_file;
    if (o.e0) cfg.pulse.e0 = *o.e0;
    if (o.omega_l && o.ratio) throw bth::InvalidInput("--omega-l and --ratio are mutually exclusive");
    if (o.omega_l) cfg.pulse.omega_l = *o.omega_l;
    if (o.ratio) {
        if (!(*o.ratio > 0.0)) throw bth::InvalidInput("--ratio: must be > 0");
        cfg.pulse.omega_l = cfg.target.omega10 / *o.ratio;
    }
    if (o.n_cycles) cfg.pulse.n_cycles = *o.n_cycles;
    if (o.alpha_deg) cfg.pulse.alpha_deg = *o.alpha_deg;
    if (o.rel_tol) cfg.integrator.rel_tol = *o.rel_tol;
    if (o.abs_tol) cfg.integrator.abs_tol = *o.abs_tol;
    if (o.samples_per_cycle) cfg.integrator.samples_per_cycle = *o.samples_per_cycle;
    if (o.pad_factor) cfg.spectral.pad_factor = *o.pad_factor;
    if (o.max_order) cfg.spectral.harmonics.max_order = *o.max_order;

    if (!scan) return cfg;
    bth::ScanSettings settings = cfg.scan.value_or(bth::ScanSettings{});
    if (o.kind) {
        const auto k = bth::parse_scan_kind(*o.kind);
        if (!k) throw bth::InvalidInput("--kind: expected field_strength, frequency_ratio or polarization_angle");
        if (*k != settings.kind) settings = bth::ScanSettings{*k, {}, {}, {}, {}};
    }
    if (!o.values.empty()) {
        settings.values = o.values;
        settings.start.reset();
        settings.stop.reset();
        settings.step.reset();
    }
    if (o.start || o.stop || o.step) {
        settings.values.clear();
        if (o.start) settings.start = *o.start;
        if (o.stop) settings.stop = *o.stop;
        if (o.step) settings.step = *o.step;
    }
    cfg.scan = settings;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harmonic generation in few-level systems: time propagation, spectra and parameter scans"};
    app.set_version_flag("--version", std::string(bth::kToolVersion));
    app.require_subcommand(1);

    Overrides run_opts;
    CLI::App* run = app.add_subcommand("run", "Propagate one pulse and write dipole, spectrum and harmonic table");
    add_common(run, run_opts);

    Overrides scan_opts;
    CLI::App* scan = app.add_subcommand("scan", "Sweep field strength, frequency ratio or polarization angle");
    add_common(scan, scan_opts);
    scan->add_option("--kind", scan_opts.kind, "field_strength, frequency_ratio or polarization_angle");
    scan->add_option("--values", scan_opts.values, "Explicit grid values")->delimiter(',');
    scan->add_option("--start", scan_opts.start, "Grid start");
    scan->add_option("--stop", scan_opts.stop, "Grid stop (inclusive)");
    scan->add_option("--step", scan_opts.step, "Grid step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? bth::kExitOk : bth::kExitConfig;
    }

    const bool is_scan = scan->parsed();
    bth::RunConfig cfg;
    try {
        cfg = resolve_config(is_scan ? scan_opts : run_opts, is_scan);
    } catch (const bth::InvalidInput& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return bth::kExitConfig;
    }

    try {
        return is_scan ? bth::cmd_scan(cfg, std::cerr) : bth::cmd_run(cfg, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bth::kExitNumerical;
    }
}
