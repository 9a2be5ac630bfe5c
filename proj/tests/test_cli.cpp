#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bth/config.hpp"
#include "bth/errors.hpp"
#include "bth/io.hpp"

using namespace bth;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "bth_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(BTHSIM_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig quick_config(const fs::path& out) {
    RunConfig c;
    c.pulse.n_cycles = 20;
    c.out_dir = out.string();
    return c;
}

}  // namespace

TEST_CASE("config defaults and parsing") {
    const RunConfig d = config_from_json(json::object());
    CHECK(d.target.kind == TargetKind::tls);
    CHECK(d.pulse.e0 == 0.015);
    CHECK(d.pulse.omega_l == 0.1 / 7.5);
    CHECK(d.pulse.n_cycles == 60);
    CHECK(d.integrator.samples_per_cycle == 128);
    CHECK(d.spectral.pad_factor == 8);
    CHECK_FALSE(d.scan.has_value());

    const RunConfig c = config_from_json(json::parse(R"({
        "target": "four_level",
        "pulse": {"e0": 0.01, "alpha_deg": 30},
        "integrator": {"rel_tol": 1e-10, "max_step": 5.0},
        "scan": {"kind": "polarization", "start": 0, "stop": 10, "step": 5},
        "workers": 3
    })"));
    CHECK(c.target.kind == TargetKind::four_level);
    CHECK(c.pulse.e0 == 0.01);
    CHECK(c.pulse.laser_pulse().alpha == doctest::Approx(std::numbers::pi / 6));
    CHECK(c.integrator.rel_tol == 1e-10);
    CHECK(c.integrator.max_step == 5.0);
    REQUIRE(c.scan.has_value());
    CHECK(c.scan->kind == ScanKind::polarization_angle);
    CHECK(c.scan->resolved_grid() == std::vector<double>{0.0, 5.0, 10.0});
    CHECK(c.workers == 3);
}

TEST_CASE("config errors carry the field path") {
    CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"pulse": {"e1": 1}})")),
                         doctest::Contains("pulse.e1"), InvalidInput);
    CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"pulse": {"e0": "big"}})")),
                         doctest::Contains("pulse.e0"), InvalidInput);
    CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"integrator": {"samples_per_cycle": 1.5}})")),
                         doctest::Contains("integrator.samples_per_cycle"), InvalidInput);
    CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"target": "three_level"})")),
                         doctest::Contains("target"), InvalidInput);
    CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"scan": {"kind": "chirp"}})")),
                         doctest::Contains("scan.kind"), InvalidInput);
    CHECK_THROWS_AS(config_from_json(json::parse("[1, 2]")), InvalidInput);

    RunConfig bad = config_from_json(json::parse(R"({"pulse": {"e0": -0.1}})"));
    CHECK_THROWS_WITH_AS(resolve_and_validate(bad, false), doctest::Contains("pulse.e0"), InvalidInput);
    RunConfig nyq = config_from_json(json::parse(R"({"integrator": {"samples_per_cycle": 32}})"));
    CHECK_THROWS_AS(resolve_and_validate(nyq, false), InvalidInput);
    RunConfig custom = config_from_json(json::parse(R"({"target": "custom"})"));
    CHECK_THROWS_WITH_AS(resolve_and_validate(custom, false), doctest::Contains("custom_system"), InvalidInput);
}

TEST_CASE("config json round trip is exact") {
    RunConfig c;
    c.pulse.e0 = 0.1 / 7.0;
    c.pulse.alpha_deg = 100.0 / 3.0;
    c.integrator.max_step = 1.0 / 3.0;
    c.target.omega30y = 0.38 / 3.0;
    c.scan = ScanSettings{ScanKind::frequency_ratio, {}, 1.0, 2.0, 0.1};
    c.target.custom = build_four_level(0.1, 0.13, -1.5, true);
    const json j = config_to_json(c);
    const RunConfig back = config_from_json(json::parse(j.dump()));
    CHECK(config_to_json(back) == j);
    CHECK(back.pulse.e0 == c.pulse.e0);
    CHECK(back.pulse.laser_pulse().alpha == c.pulse.laser_pulse().alpha);
    CHECK(back.target.custom->initial_state == c.target.custom->initial_state);

    // Provenance wrappers are accepted as configuration input.
    const RunConfig wrapped = config_from_json({{"tool", "bthsim"}, {"config", j}});
    CHECK(config_to_json(wrapped) == j);
}

TEST_CASE("custom level system from json") {
    const json j = json::parse(R"({
        "energies": [-0.05, 0.0, 0.05],
        "coupling_x": [[0, -1.5, 0], [-1.5, 0, 0], [0, 0, 0]],
        "coupling_y": [[0, 0, 0], [0, 0, 0.5], [0, 0.5, 0]],
        "initial_state": [1, [0, 0], 0]
    })");
    const LevelSystem s = level_system_from_json(j, "custom_system");
    CHECK(s.n_levels() == 3);
    CHECK(s.coupling_y(1, 2) == 0.5);
    json asym = j;
    asym["coupling_x"][0][1] = -1.4;
    CHECK_THROWS_WITH_AS(level_system_from_json(asym, "custom_system"), doctest::Contains("custom_system"),
                         InvalidInput);
    json complex_coupling = j;
    complex_coupling["coupling_x"][0][1] = json::array({1.0, 0.5});
    CHECK_THROWS_AS(level_system_from_json(complex_coupling, "custom_system"), InvalidInput);
}

TEST_CASE("number formatting keeps 17 significant digits") {
    CHECK(format_double(0.1) == "1.0000000000000001e-01");
    CHECK(format_double(-0.0) == "0.0000000000000000e+00");
    for (double v : {1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.1 / 7.5})
        CHECK(std::stod(format_double(v)) == v);
    CHECK(binary_phase_label(BinaryPhase::zero) == "0");
    CHECK(binary_phase_label(BinaryPhase::pi) == "pi");
    CHECK(binary_phase_label(BinaryPhase::invalid) == "invalid");
}

TEST_CASE("cmd_run writes the documented files") {
    const fs::path out = scratch("run_defaults");
    RunConfig c;
    c.out_dir = out.string();
    std::ostringstream log;
    REQUIRE(cmd_run(c, log) == kExitOk);

    const auto dip = lines(out / "dipole.csv");
    CHECK(dip.front() == "t,dx,dy");
    CHECK(dip.size() == 60 * 128 + 2);
    const auto spec = lines(out / "spectrum.csv");
    CHECK(spec.front() == "omega_au,omega_over_wl,abs_dx,arg_dx,abs_dy,arg_dy,yield");
    const auto harm = lines(out / "harmonics.csv");
    CHECK(harm.front() ==
          "order,intensity,phase_x,phase_x_binary,phase_y,phase_y_binary,alpha_n_deg,ellipticity,valid");
    CHECK(harm.size() == 10);
    for (std::size_t i = 1; i < harm.size(); ++i) CHECK(split(harm[i]).size() == 9);

    // A spectrum row sits within one bin of the x resonance at 7.5 omega_l.
    double step = 0.0, best = 1e9;
    double prev = -1.0;
    for (std::size_t i = 1; i < spec.size(); ++i) {
        const double h = std::stod(split(spec[i])[1]);
        if (prev >= 0.0) step = h - prev;
        prev = h;
        best = std::min(best, std::abs(h - 7.5));
    }
    CHECK(best <= step);

    const json prov = json::parse(slurp(out / "run.json"));
    CHECK(prov["tool"] == "bthsim");
    CHECK(prov["version"] == kToolVersion);
    CHECK(prov["config"]["pulse"]["e0"] == 0.015);
    CHECK(prov["results"]["norm_drift"].get<double>() < 1e-8);
}

TEST_CASE("rerunning from run.json reproduces outputs bit for bit") {
    const fs::path a = scratch("roundtrip_a");
    const fs::path b = scratch("roundtrip_b");
    RunConfig c = quick_config(a);
    c.pulse.alpha_deg = 0.0;
    c.pulse.e0 = 0.0123;
    std::ostringstream log;
    REQUIRE(cmd_run(c, log) == kExitOk);
    RunConfig again = load_config_file((a / "run.json").string());
    again.out_dir = b.string();
    REQUIRE(cmd_run(again, log) == kExitOk);
    for (const char* f : {"dipole.csv", "spectrum.csv", "harmonics.csv"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("zero field run flags every harmonic invalid") {
    const fs::path out = scratch("zero_field");
    RunConfig c = quick_config(out);
    c.pulse.e0 = 0.0;
    std::ostringstream log;
    REQUIRE(cmd_run(c, log) == kExitOk);
    const auto harm = lines(out / "harmonics.csv");
    for (std::size_t i = 1; i < harm.size(); ++i) CHECK(split(harm[i]).back() == "0");
}

TEST_CASE("single-point scan matches the run output") {
    const fs::path run_dir = scratch("single_run");
    const fs::path scan_dir = scratch("single_scan");
    RunConfig c = quick_config(run_dir);
    c.pulse.omega_l = 0.1 / 7.5;
    std::ostringstream log;
    REQUIRE(cmd_run(c, log) == kExitOk);
    RunConfig s = quick_config(scan_dir);
    s.scan = ScanSettings{ScanKind::frequency_ratio, {7.5}, {}, {}, {}};
    REQUIRE(cmd_scan(s, log) == kExitOk);

    const auto run_rows = lines(run_dir / "harmonics.csv");
    const auto scan_rows = lines(scan_dir / "scan_harmonics.csv");
    REQUIRE(run_rows.size() == scan_rows.size());
    CHECK(scan_rows.front() ==
          "param_name,param_value,order,intensity,phase_x,phase_y,alpha_n_deg,ellipticity,valid");
    for (std::size_t i = 1; i < run_rows.size(); ++i) {
        const auto r = split(run_rows[i]);
        const auto q = split(scan_rows[i]);
        CHECK(q[0] == "ratio");
        CHECK(q[2] == r[0]);  // order
        CHECK(q[3] == r[1]);  // intensity
        CHECK(q[4] == r[2]);  // phase_x
        CHECK(q[5] == r[4]);  // phase_y
        CHECK(q[6] == r[6]);  // alpha_n_deg
        CHECK(q[7] == r[7]);  // ellipticity
        CHECK(q[8] == r[8]);  // valid
    }
    CHECK(lines(scan_dir / "scan_yield.csv").front() == "param_name,param_value,omega_over_wl,yield");
    const json prov = json::parse(slurp(scan_dir / "scan.json"));
    CHECK(prov["config"]["scan"]["values"] == json::array({7.5}));
}

TEST_CASE("interrupted scans resume from the manifest") {
    const fs::path full = scratch("resume_full");
    const fs::path part = scratch("resume_part");
    RunConfig c = quick_config(full);
    c.scan = ScanSettings{ScanKind::frequency_ratio, {3.0, 5.0, 7.5, 9.0}, {}, {}, {}};
    std::ostringstream log;
    REQUIRE(cmd_scan(c, log) == kExitOk);
    const auto manifest = lines(full / "scan_manifest.jsonl");
    REQUIRE(manifest.size() == 5);

    // Keep the header, two finished points and a torn line.
    fs::create_directories(part);
    {
        std::ofstream os(part / "scan_manifest.jsonl");
        os << manifest[0] << '\n' << manifest[1] << '\n' << manifest[3] << '\n' << manifest[4].substr(0, 40);
    }
    RunConfig r = c;
    r.out_dir = part.string();
    r.workers = 2;
    std::ostringstream rlog;
    REQUIRE(cmd_scan(r, rlog) == kExitOk);
    CHECK(rlog.str().find("resuming: 2 of 4") != std::string::npos);
    CHECK(slurp(full / "scan_yield.csv") == slurp(part / "scan_yield.csv"));
    CHECK(slurp(full / "scan_harmonics.csv") == slurp(part / "scan_harmonics.csv"));

    // A manifest from a different configuration is discarded.
    RunConfig other = r;
    other.pulse.e0 = 0.01;
    std::ostringstream olog;
    REQUIRE(cmd_scan(other, olog) == kExitOk);
    CHECK(olog.str().find("resuming") == std::string::npos);
}

TEST_CASE("numerical failure exits 3 and keeps partial scan results") {
    const fs::path out = scratch("numerical");
    RunConfig c = quick_config(out);
    c.integrator.norm_tolerance = 1e-30;
    std::ostringstream log;
    CHECK(cmd_run(c, log) == kExitNumerical);
    c.scan = ScanSettings{ScanKind::frequency_ratio, {3.0, 5.0}, {}, {}, {}};
    CHECK(cmd_scan(c, log) == kExitNumerical);
    CHECK(fs::exists(out / "scan_manifest.jsonl"));
    CHECK_FALSE(fs::exists(out / "scan_yield.csv"));
}

TEST_CASE("command-line exit codes") {
    const fs::path root = scratch("tool");
    CHECK(run_tool("--help >/dev/null") == 0);
    CHECK(run_tool("") == 2);
    CHECK(run_tool("run --no-such-flag") == 2);
    CHECK(run_tool("run --e0 abc") == 2);

    // Malformed configuration: exit 2 and nothing written.
    write_text(root / "bad.json", "{ \"pulse\": { \"e0\": 0.01, } ");
    CHECK(run_tool("run --config " + (root / "bad.json").string() + " --out " + (root / "bad_out").string()) == 2);
    CHECK_FALSE(fs::exists(root / "bad_out"));
    write_text(root / "neg.json", R"({"pulse": {"e0": -1}})");
    CHECK(run_tool("run --config " + (root / "neg.json").string() + " --out " + (root / "neg_out").string()) == 2);
    CHECK_FALSE(fs::exists(root / "neg_out"));
    CHECK(run_tool("scan --kind polarization_angle --values 0,10 --out " + (root / "tls_pol").string()) == 2);
    CHECK_FALSE(fs::exists(root / "tls_pol"));

    write_text(root / "tight.json", R"({"pulse": {"n_cycles": 10}, "integrator": {"norm_tolerance": 1e-30}})");
    CHECK(run_tool("run --config " + (root / "tight.json").string() + " --out " + (root / "tight").string()) == 3);
}

TEST_CASE("flags override the file, the file overrides defaults") {
    const fs::path root = scratch("precedence");
    write_text(root / "cfg.json", R"({"pulse": {"e0": 0.01, "n_cycles": 12}, "out": "ignored"})");
    REQUIRE(run_tool("run --config " + (root / "cfg.json").string() + " --e0 0.02 --ratio 5 --out " +
                     (root / "out").string()) == 0);
    const json prov = json::parse(slurp(root / "out" / "run.json"));
    CHECK(prov["config"]["pulse"]["e0"] == 0.02);
    CHECK(prov["config"]["pulse"]["n_cycles"] == 12);
    CHECK(prov["config"]["pulse"]["omega_l"] == 0.1 / 5.0);
    CHECK(prov["config"]["pulse"]["gaussian_fwhm_fraction"] == 0.5);
}

TEST_CASE("custom system file through the command line") {
    const fs::path root = scratch("custom");
    write_text(root / "sys.json", R"({
        "energies": [-0.05, 0.05],
        "coupling_x": [[0, -1.5], [-1.5, 0]],
        "coupling_y": [[0, 0], [0, 0]],
        "initial_state": [1, 0]
    })");
    REQUIRE(run_tool("run --target custom --custom-system " + (root / "sys.json").string() +
                     " --n-cycles 10 --out " + (root / "custom").string()) == 0);
    REQUIRE(run_tool("run --n-cycles 10 --out " + (root / "tls").string()) == 0);
    CHECK(slurp(root / "custom" / "harmonics.csv") == slurp(root / "tls" / "harmonics.csv"));
    const json prov = json::parse(slurp(root / "custom" / "run.json"));
    CHECK(prov["config"].contains("custom_system"));
}
