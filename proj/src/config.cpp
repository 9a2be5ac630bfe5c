#include "bth/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "bth/errors.hpp"

namespace bth {

using nlohmann::json;

namespace {

// Accessors that turn nlohmann type errors into field-path diagnostics.

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw InvalidInput(path + ": expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) throw InvalidInput(path + (path.empty() ? "" : ".") + k + ": unknown field");
    }
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void read_number(const json& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) throw InvalidInput(join(path, key) + ": expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw InvalidInput(join(path, key) + ": must be finite");
}

void read_int(const json& obj, const std::string& path, const char* key, int& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw InvalidInput(join(path, key) + ": expected an integer");
    out = v.get<int>();
}

void read_bool(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw InvalidInput(join(path, key) + ": expected true or false");
    out = v.get<bool>();
}

void read_string(const json& obj, const std::string& path, const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_string()) throw InvalidInput(join(path, key) + ": expected a string");
    out = v.get<std::string>();
}

std::vector<double> read_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw InvalidInput(path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw InvalidInput(path + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

Eigen::MatrixXd read_matrix(const json& v, const std::string& path, Eigen::Index n) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(n))
        throw InvalidInput(path + ": expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!row.is_array() || row.size() != static_cast<std::size_t>(n))
            throw InvalidInput(rp + ": expected " + std::to_string(n) + " real entries");
        for (Eigen::Index k = 0; k < n; ++k) {
            const json& e = row[static_cast<std::size_t>(k)];
            if (!e.is_number())
                throw InvalidInput(rp + "[" + std::to_string(k) + "]: couplings must be real numbers");
            m(i, k) = e.get<double>();
        }
    }
    return m;
}

}  // namespace

LaserPulse PulseParams::laser_pulse() const {
    LaserPulse p;
    p.e0 = e0;
    p.omega_l = omega_l;
    p.n_cycles = n_cycles;
    p.alpha = alpha_deg * std::numbers::pi / 180.0;
    p.gaussian_fwhm_fraction = gaussian_fwhm_fraction;
    p.tukey_fraction = tukey_fraction;
    return p;
}

std::vector<double> ScanSettings::resolved_grid() const {
    if (!values.empty()) return values;
    if (start || stop || step) {
        if (!(start && stop && step)) throw InvalidInput("scan: start, stop and step must be given together");
        return linspace_step(*start, *stop, *step);
    }
    return default_grid(kind);
}

json level_system_to_json(const LevelSystem& s) {
    const Eigen::Index n = s.n_levels();
    json j;
    j["energies"] = std::vector<double>(s.energies.data(), s.energies.data() + n);
    auto mat = [n](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < n; ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < n; ++k) row.push_back(m(i, k));
            rows.push_back(row);
        }
        return rows;
    };
    j["coupling_x"] = mat(s.coupling_x);
    j["coupling_y"] = mat(s.coupling_y);
    json c0 = json::array();
    for (Eigen::Index i = 0; i < n; ++i) c0.push_back({s.initial_state[i].real(), s.initial_state[i].imag()});
    j["initial_state"] = c0;
    return j;
}

LevelSystem level_system_from_json(const json& j, const std::string& path) {
    reject_unknown(j, path, {"energies", "coupling_x", "coupling_y", "initial_state"});
    for (const char* key : {"energies", "coupling_x", "initial_state"})
        if (!j.contains(key)) throw InvalidInput(join(path, key) + ": required field missing");

    const std::vector<double> e = read_vector(j.at("energies"), join(path, "energies"));
    const auto n = static_cast<Eigen::Index>(e.size());
    Eigen::VectorXd energies = Eigen::Map<const Eigen::VectorXd>(e.data(), n);
    Eigen::MatrixXd cx = read_matrix(j.at("coupling_x"), join(path, "coupling_x"), n);
    Eigen::MatrixXd cy = j.contains("coupling_y")
                             ? read_matrix(j.at("coupling_y"), join(path, "coupling_y"), n)
                             : Eigen::MatrixXd::Zero(n, n);

    const json& c0 = j.at("initial_state");
    const std::string cp = join(path, "initial_state");
    if (!c0.is_array() || c0.size() != static_cast<std::size_t>(n))
        throw InvalidInput(cp + ": expected " + std::to_string(n) + " amplitudes");
    Eigen::VectorXcd init(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& a = c0[static_cast<std::size_t>(i)];
        const std::string ap = cp + "[" + std::to_string(i) + "]";
        if (a.is_number()) {
            init[i] = a.get<double>();
        } else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
            init[i] = {a[0].get<double>(), a[1].get<double>()};
        } else {
            throw InvalidInput(ap + ": expected a number or a [re, im] pair");
        }
    }
    try {
        return make_level_system(std::move(energies), std::move(cx), std::move(cy), std::move(init));
    } catch (const InvalidInput& err) {
        throw InvalidInput(join(path, err.what()));
    }
}

RunConfig config_from_json(const json& root) {
    if (!root.is_object()) throw InvalidInput("config: expected a JSON object");
    if (root.contains("tool") && root.contains("config")) return config_from_json(root.at("config"));

    reject_unknown(root, "", {"target", "system", "custom_system", "custom_system_file", "pulse",
                              "integrator", "spectral", "scan", "out", "workers"});
    RunConfig cfg;

    if (root.contains("target")) {
        const json& t = root.at("target");
        if (!t.is_string()) throw InvalidInput("target: expected a string");
        const auto name = t.get<std::string>();
        if (name == "tls") cfg.target.kind = TargetKind::tls;
        else if (name == "four_level") cfg.target.kind = TargetKind::four_level;
        else if (name == "custom") cfg.target.kind = TargetKind::custom;
        else throw InvalidInput("target: expected one of tls, four_level, custom");
    }
    if (root.contains("system")) {
        const json& s = root.at("system");
        reject_unknown(s, "system", {"omega10", "d", "omega21x", "omega30y", "normalize_initial_state"});
        read_number(s, "system", "omega10", cfg.target.omega10);
        read_number(s, "system", "d", cfg.target.d);
        read_number(s, "system", "omega21x", cfg.target.omega21x);
        read_number(s, "system", "omega30y", cfg.target.omega30y);
        read_bool(s, "system", "normalize_initial_state", cfg.target.normalize_initial_state);
    }
    if (root.contains("custom_system"))
        cfg.target.custom = level_system_from_json(root.at("custom_system"), "custom_system");
    read_string(root, "", "custom_system_file", cfg.custom_system_file);

    if (root.contains("pulse")) {
        const json& p = root.at("pulse");
        reject_unknown(p, "pulse", {"e0", "omega_l", "n_cycles", "alpha_deg", "gaussian_fwhm_fraction",
                                    "tukey_fraction"});
        read_number(p, "pulse", "e0", cfg.pulse.e0);
        read_number(p, "pulse", "omega_l", cfg.pulse.omega_l);
        read_int(p, "pulse", "n_cycles", cfg.pulse.n_cycles);
        read_number(p, "pulse", "alpha_deg", cfg.pulse.alpha_deg);
        read_number(p, "pulse", "gaussian_fwhm_fraction", cfg.pulse.gaussian_fwhm_fraction);
        read_number(p, "pulse", "tukey_fraction", cfg.pulse.tukey_fraction);
    }
    if (root.contains("integrator")) {
        const json& g = root.at("integrator");
        reject_unknown(g, "integrator", {"rel_tol", "abs_tol", "samples_per_cycle", "max_step", "norm_tolerance"});
        read_number(g, "integrator", "rel_tol", cfg.integrator.rel_tol);
        read_number(g, "integrator", "abs_tol", cfg.integrator.abs_tol);
        read_int(g, "integrator", "samples_per_cycle", cfg.integrator.samples_per_cycle);
        if (g.contains("max_step") && !g.at("max_step").is_null()) {
            double ms = 0.0;
            read_number(g, "integrator", "max_step", ms);
            cfg.integrator.max_step = ms;
        }
        read_number(g, "integrator", "norm_tolerance", cfg.integrator.norm_tolerance);
    }
    if (root.contains("spectral")) {
        const json& s = root.at("spectral");
        reject_unknown(s, "spectral", {"pad_factor", "max_order", "yield_floor", "binary_phase_threshold",
                                       "yield_resolution", "yield_max_harmonic"});
        read_int(s, "spectral", "pad_factor", cfg.spectral.pad_factor);
        read_int(s, "spectral", "max_order", cfg.spectral.harmonics.max_order);
        read_number(s, "spectral", "yield_floor", cfg.spectral.harmonics.yield_floor_rel);
        read_number(s, "spectral", "binary_phase_threshold", cfg.spectral.harmonics.phase_threshold);
        read_number(s, "spectral", "yield_resolution", cfg.spectral.yield_resolution);
        read_number(s, "spectral", "yield_max_harmonic", cfg.spectral.yield_max_harmonic);
    }
    if (root.contains("scan") && !root.at("scan").is_null()) {
        const json& s = root.at("scan");
        reject_unknown(s, "scan", {"kind", "values", "start", "stop", "step"});
        ScanSettings scan;
        std::string kind = to_string(scan.kind);
        read_string(s, "scan", "kind", kind);
        const auto parsed = parse_scan_kind(kind);
        if (!parsed)
            throw InvalidInput("scan.kind: expected field_strength, frequency_ratio or polarization_angle");
        scan.kind = *parsed;
        if (s.contains("values")) scan.values = read_vector(s.at("values"), "scan.values");
        for (const char* key : {"start", "stop", "step"}) {
            if (!s.contains(key)) continue;
            double v = 0.0;
            read_number(s, "scan", key, v);
            (std::string(key) == "start" ? scan.start : std::string(key) == "stop" ? scan.stop : scan.step) = v;
        }
        cfg.scan = scan;
    }
    read_string(root, "", "out", cfg.out_dir);
    read_int(root, "", "workers", cfg.workers);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput("config: malformed JSON in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const RunConfig& cfg) {
    json j;
    switch (cfg.target.kind) {
        case TargetKind::tls: j["target"] = "tls"; break;
        case TargetKind::four_level: j["target"] = "four_level"; break;
        case TargetKind::custom: j["target"] = "custom"; break;
    }
    j["system"] = {{"omega10", cfg.target.omega10},
                   {"d", cfg.target.d},
                   {"omega21x", cfg.target.omega21x},
                   {"omega30y", cfg.target.omega30y},
                   {"normalize_initial_state", cfg.target.normalize_initial_state}};
    if (cfg.target.custom) j["custom_system"] = level_system_to_json(*cfg.target.custom);
    j["pulse"] = {{"e0", cfg.pulse.e0},
                  {"omega_l", cfg.pulse.omega_l},
                  {"n_cycles", cfg.pulse.n_cycles},
                  {"alpha_deg", cfg.pulse.alpha_deg},
                  {"gaussian_fwhm_fraction", cfg.pulse.gaussian_fwhm_fraction},
                  {"tukey_fraction", cfg.pulse.tukey_fraction}};
    j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                       {"abs_tol", cfg.integrator.abs_tol},
                       {"samples_per_cycle", cfg.integrator.samples_per_cycle},
                       {"max_step", cfg.integrator.max_step ? json(*cfg.integrator.max_step) : json(nullptr)},
                       {"norm_tolerance", cfg.integrator.norm_tolerance}};
    j["spectral"] = {{"pad_factor", cfg.spectral.pad_factor},
                     {"max_order", cfg.spectral.harmonics.max_order},
                     {"yield_floor", cfg.spectral.harmonics.yield_floor_rel},
                     {"binary_phase_threshold", cfg.spectral.harmonics.phase_threshold},
                     {"yield_resolution", cfg.spectral.yield_resolution},
                     {"yield_max_harmonic", cfg.spectral.yield_max_harmonic}};
    if (cfg.scan) {
        j["scan"] = {{"kind", to_string(cfg.scan->kind)}, {"values", cfg.scan->resolved_grid()}};
    }
    j["out"] = cfg.out_dir;
    j["workers"] = cfg.workers;
    return j;
}

void resolve_and_validate(RunConfig& cfg, bool for_scan) {
    if (!cfg.custom_system_file.empty()) {
        std::ifstream in(cfg.custom_system_file);
        if (!in) throw InvalidInput("custom_system_file: cannot open " + cfg.custom_system_file);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InvalidInput("custom_system_file: malformed JSON: " + std::string(e.what()));
        }
        cfg.target.custom = level_system_from_json(j, "custom_system_file");
        cfg.custom_system_file.clear();
    }
    if (cfg.target.kind == TargetKind::custom && !cfg.target.custom)
        throw InvalidInput("custom_system: required when target is custom");
    if (cfg.workers < 1) throw InvalidInput("workers: must be >= 1");
    if (cfg.out_dir.empty()) throw InvalidInput("out: must not be empty");

    build_target(cfg.target);
    validate(cfg.pulse.laser_pulse());
    validate(cfg.integrator);
    validate(cfg.spectral, cfg.integrator);
    if (for_scan) {
        if (!cfg.scan) cfg.scan = ScanSettings{};
        validate(make_scan_spec(cfg));
    }
}

ScanSpec make_scan_spec(const RunConfig& cfg) {
    ScanSpec spec;
    const ScanSettings settings = cfg.scan.value_or(ScanSettings{});
    spec.kind = settings.kind;
    spec.grid = settings.resolved_grid();
    spec.target = cfg.target;
    spec.pulse = cfg.pulse.laser_pulse();
    spec.integrator = cfg.integrator;
    spec.spectral = cfg.spectral;
    return spec;
}

}  // namespace bth
