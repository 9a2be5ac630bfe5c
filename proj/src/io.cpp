#include "bth/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>

#include "bth/errors.hpp"

namespace bth {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void write_file(const fs::path& path, const std::string& what,
                const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + what + " to " + path.string());
    body(os);
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

json table_row_json(const HarmonicRow& r) {
    return {{"order", r.order},
            {"intensity", r.intensity},
            {"phase_x", r.phase_x},
            {"phase_y", r.phase_y},
            {"binary_x", binary_phase_label(r.binary_x)},
            {"binary_y", binary_phase_label(r.binary_y)},
            {"alpha_n", r.alpha_n},
            {"ellipticity", r.ellipticity},
            {"valid", r.valid}};
}

BinaryPhase binary_from_label(const std::string& s) {
    if (s == "0") return BinaryPhase::zero;
    if (s == "pi") return BinaryPhase::pi;
    return BinaryPhase::invalid;
}

json provenance(const RunConfig& cfg, const std::string& command, const std::string& started) {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", command},
            {"started_utc", started},
            {"finished_utc", utc_now()},
            {"config", config_to_json(cfg)}};
}

}  // namespace

std::string format_double(double v) {
    if (v == 0.0) v = 0.0;  // no "-0"
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string binary_phase_label(BinaryPhase b) {
    switch (b) {
        case BinaryPhase::zero: return "0";
        case BinaryPhase::pi: return "pi";
        case BinaryPhase::invalid: return "invalid";
    }
    return "invalid";
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_dipole_csv(std::ostream& os, const DipoleSeries& d) {
    os << "t,dx,dy\n";
    for (std::size_t m = 0; m < d.times.size(); ++m)
        os << format_double(d.times[m]) << ',' << format_double(d.dx[m]) << ',' << format_double(d.dy[m]) << '\n';
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s, double omega_l) {
    os << "omega_au,omega_over_wl,abs_dx,arg_dx,abs_dy,arg_dy,yield\n";
    for (std::size_t k = 0; k < s.freqs.size(); ++k) {
        os << format_double(s.freqs[k]) << ',' << format_double(s.freqs[k] / omega_l) << ','
           << format_double(std::abs(s.dx_tilde[k])) << ',' << format_double(std::arg(s.dx_tilde[k])) << ','
           << format_double(std::abs(s.dy_tilde[k])) << ',' << format_double(std::arg(s.dy_tilde[k])) << ','
           << format_double(s.yield_total[k]) << '\n';
    }
}

void write_harmonics_csv(std::ostream& os, const HarmonicTable& table) {
    os << "order,intensity,phase_x,phase_x_binary,phase_y,phase_y_binary,alpha_n_deg,ellipticity,valid\n";
    for (const HarmonicRow& r : table) {
        os << r.order << ',' << format_double(r.intensity) << ',' << format_double(r.phase_x) << ','
           << binary_phase_label(r.binary_x) << ',' << format_double(r.phase_y) << ','
           << binary_phase_label(r.binary_y) << ',' << format_double(r.alpha_n * kRadToDeg) << ','
           << format_double(r.ellipticity) << ',' << (r.valid ? 1 : 0) << '\n';
    }
}

void write_scan_yield_csv(std::ostream& os, const ScanResult& result) {
    const std::string name = param_name(result.kind);
    os << "param_name,param_value,omega_over_wl,yield\n";
    for (const ScanPoint& p : result.points)
        for (const YieldSample& y : p.yield_curve)
            os << name << ',' << format_double(p.value) << ',' << format_double(y.harmonic) << ','
               << format_double(y.yield) << '\n';
}

void write_scan_harmonics_csv(std::ostream& os, const ScanResult& result) {
    const std::string name = param_name(result.kind);
    os << "param_name,param_value,order,intensity,phase_x,phase_y,alpha_n_deg,ellipticity,valid\n";
    for (const ScanPoint& p : result.points)
        for (const HarmonicRow& r : p.table)
            os << name << ',' << format_double(p.value) << ',' << r.order << ',' << format_double(r.intensity)
               << ',' << format_double(r.phase_x) << ',' << format_double(r.phase_y) << ','
               << format_double(r.alpha_n * kRadToDeg) << ',' << format_double(r.ellipticity) << ','
               << (r.valid ? 1 : 0) << '\n';
}

json scan_point_to_json(const ScanPoint& p) {
    json curve = json::array();
    for (const YieldSample& y : p.yield_curve) curve.push_back({y.harmonic, y.yield});
    json table = json::array();
    for (const HarmonicRow& r : p.table) table.push_back(table_row_json(r));
    return {{"value", p.value}, {"norm_drift", p.norm_drift}, {"yield_curve", curve}, {"table", table}};
}

ScanPoint scan_point_from_json(const json& j) {
    ScanPoint p;
    p.value = j.at("value").get<double>();
    p.norm_drift = j.at("norm_drift").get<double>();
    for (const json& y : j.at("yield_curve")) p.yield_curve.push_back({y.at(0).get<double>(), y.at(1).get<double>()});
    for (const json& r : j.at("table")) {
        HarmonicRow row;
        row.order = r.at("order").get<int>();
        row.intensity = r.at("intensity").get<double>();
        row.phase_x = r.at("phase_x").get<double>();
        row.phase_y = r.at("phase_y").get<double>();
        row.binary_x = binary_from_label(r.at("binary_x").get<std::string>());
        row.binary_y = binary_from_label(r.at("binary_y").get<std::string>());
        row.alpha_n = r.at("alpha_n").get<double>();
        row.ellipticity = r.at("ellipticity").get<double>();
        row.valid = r.at("valid").get<bool>();
        p.table.push_back(row);
    }
    return p;
}

std::vector<ScanPoint> ScanManifest::load(const json& config) const {
    std::vector<ScanPoint> points;
    std::ifstream in(path_);
    if (!in) return points;
    std::string line;
    if (!std::getline(in, line)) return points;
    try {
        const json header = json::parse(line);
        if (header.value("config", json()) != config) return points;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            points.push_back(scan_point_from_json(json::parse(line)));
        }
    } catch (const json::exception&) {
        // A torn final line from an interrupted run is dropped; earlier points stay usable.
    }
    return points;
}

void ScanManifest::open(const json& config, bool keep_existing) {
    if (keep_existing && fs::exists(path_)) return;
    std::ofstream os(path_, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write manifest " + path_.string());
    os << json{{"manifest", kToolName}, {"version", kToolVersion}, {"config", config}}.dump() << '\n';
}

void ScanManifest::append(const ScanPoint& point) const {
    std::ofstream os(path_, std::ios::app);
    if (!os) throw std::runtime_error("cannot append to manifest " + path_.string());
    os << scan_point_to_json(point).dump() << '\n';
}

int cmd_run(RunConfig cfg, std::ostream& log) {
    const std::string started = utc_now();
    try {
        resolve_and_validate(cfg, false);
    } catch (const InvalidInput& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    RunResult r;
    try {
        r = run_pipeline(cfg.target, cfg.pulse.laser_pulse(), cfg.integrator, cfg.spectral);
    } catch (const InvalidInput& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    const double omega_l = r.pulse.omega_l;
    write_file(out / "dipole.csv", "dipole", [&](std::ostream& os) { write_dipole_csv(os, r.dipole); });
    write_file(out / "spectrum.csv", "spectrum", [&](std::ostream& os) { write_spectrum_csv(os, r.spectrum, omega_l); });
    write_file(out / "harmonics.csv", "harmonics", [&](std::ostream& os) { write_harmonics_csv(os, r.table); });

    json prov = provenance(cfg, "run", started);
    prov["results"] = {{"norm_drift", r.trajectory.norm_drift},
                       {"samples", r.trajectory.size()},
                       {"dt", r.trajectory.dt()},
                       {"n_fft", r.spectrum.n_fft},
                       {"max_yield", r.spectrum.max_yield()}};
    write_file(out / "run.json", "provenance", [&](std::ostream& os) { os << prov.dump(2) << '\n'; });
    log << "wrote " << out.string() << " (norm drift " << r.trajectory.norm_drift << ")\n";
    return kExitOk;
}

int cmd_scan(RunConfig cfg, std::ostream& log) {
    const std::string started = utc_now();
    ScanSpec spec;
    try {
        resolve_and_validate(cfg, true);
        spec = make_scan_spec(cfg);
    } catch (const InvalidInput& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);

    // Worker count and output directory do not affect results, so they are
    // left out of the manifest identity.
    json identity = config_to_json(cfg);
    identity.erase("workers");
    identity.erase("out");
    ScanManifest manifest(out / "scan_manifest.jsonl");
    ScanOptions opts;
    opts.workers = cfg.workers;
    opts.completed = manifest.load(identity);
    manifest.open(identity, !opts.completed.empty());
    if (!opts.completed.empty())
        log << "resuming: " << opts.completed.size() << " of " << spec.grid.size() << " points already done\n";

    std::size_t done = opts.completed.size();
    opts.on_point = [&](const ScanPoint& p) {
        manifest.append(p);
        ++done;
        log << "[" << done << "/" << spec.grid.size() << "] " << param_name(spec.kind) << "=" << p.value << '\n';
    };

    ScanResult result;
    try {
        result = run_scan(spec, opts);
    } catch (const InvalidInput& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << "\npartial results kept in " << manifest.path().string()
            << '\n';
        return kExitNumerical;
    }

    write_file(out / "scan_yield.csv", "scan yield", [&](std::ostream& os) { write_scan_yield_csv(os, result); });
    write_file(out / "scan_harmonics.csv", "scan harmonics",
               [&](std::ostream& os) { write_scan_harmonics_csv(os, result); });

    json prov = provenance(cfg, "scan", started);
    double max_drift = 0.0;
    for (const ScanPoint& p : result.points) max_drift = std::max(max_drift, p.norm_drift);
    prov["results"] = {{"points", result.points.size()},
                       {"param_name", param_name(result.kind)},
                       {"max_norm_drift", max_drift}};
    write_file(out / "scan.json", "provenance", [&](std::ostream& os) { os << prov.dump(2) << '\n'; });
    log << "wrote " << out.string() << '\n';
    return kExitOk;
}

}  // namespace bth
