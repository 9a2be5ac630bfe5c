#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "bth/errors.hpp"
#include "bth/io.hpp"
#include "bth/scans.hpp"

using namespace bth;
constexpr double kPi = std::numbers::pi;

namespace {

ScanSpec ratio_spec(std::vector<double> grid) {
    ScanSpec s;
    s.kind = ScanKind::frequency_ratio;
    s.grid = std::move(grid);
    s.pulse.n_cycles = 20;
    return s;
}

std::string serialized(const ScanResult& r) {
    std::ostringstream a;
    write_scan_yield_csv(a, r);
    write_scan_harmonics_csv(a, r);
    return a.str();
}

}  // namespace

TEST_CASE("scan kind names round trip") {
    for (ScanKind k : {ScanKind::field_strength, ScanKind::frequency_ratio, ScanKind::polarization_angle})
        CHECK(parse_scan_kind(to_string(k)) == k);
    CHECK(parse_scan_kind("polarization") == ScanKind::polarization_angle);
    CHECK_FALSE(parse_scan_kind("chirp").has_value());
    CHECK(param_name(ScanKind::field_strength) == "e0");
    CHECK(param_name(ScanKind::frequency_ratio) == "ratio");
    CHECK(param_name(ScanKind::polarization_angle) == "alpha_deg");
}

TEST_CASE("default grids") {
    CHECK(default_grid(ScanKind::field_strength) == std::vector<double>{0.005, 0.01, 0.015, 0.02});
    const std::vector<double> ratio = default_grid(ScanKind::frequency_ratio);
    CHECK(ratio.size() == 321);
    CHECK(ratio.front() == 1.0);
    CHECK(ratio.back() == 17.0);
    CHECK(std::find(ratio.begin(), ratio.end(), 7.5) != ratio.end());
    const std::vector<double> alpha = default_grid(ScanKind::polarization_angle);
    CHECK(alpha.size() == 91);
    CHECK(alpha[45] == 45.0);
    CHECK(linspace_step(1.0, 2.0, 0.1).size() == 11);
    CHECK(linspace_step(1.0, 2.0, 0.1)[3] == 1.3);
    CHECK_THROWS_AS(linspace_step(2.0, 1.0, 0.1), InvalidInput);
    CHECK_THROWS_AS(linspace_step(1.0, 2.0, 0.0), InvalidInput);
}

TEST_CASE("scan spec validation") {
    ScanSpec s = ratio_spec({});
    CHECK_THROWS_AS(validate(s), InvalidInput);
    s.grid = {1.0, 3.0, 2.0};
    CHECK_THROWS_AS(validate(s), InvalidInput);
    s.grid = {0.0, 1.0};
    CHECK_THROWS_AS(validate(s), InvalidInput);
    s.grid = {3.0, 2.0, 1.0};
    CHECK_NOTHROW(validate(s));
    s.target.kind = TargetKind::four_level;
    CHECK_THROWS_AS(validate(s), InvalidInput);

    ScanSpec f = ratio_spec({0.01});
    f.kind = ScanKind::field_strength;
    f.target.kind = TargetKind::four_level;
    CHECK_THROWS_AS(validate(f), InvalidInput);
    f.grid = {-0.01};
    f.target.kind = TargetKind::tls;
    CHECK_THROWS_AS(validate(f), InvalidInput);

    ScanSpec p = ratio_spec({10.0});
    p.kind = ScanKind::polarization_angle;
    CHECK_THROWS_AS(validate(p), InvalidInput);
    p.target.kind = TargetKind::four_level;
    CHECK_NOTHROW(validate(p));
    p.integrator.samples_per_cycle = 64;  // below 6 x 17
    CHECK_THROWS_AS(validate(p), InvalidInput);
}

TEST_CASE("pulse_for maps grid values onto the pulse") {
    ScanSpec s = ratio_spec({7.5});
    CHECK(pulse_for(s, 7.5).omega_l == 0.1 / 7.5);
    s.kind = ScanKind::polarization_angle;
    CHECK(pulse_for(s, 90.0).alpha == doctest::Approx(kPi / 2));
    s.kind = ScanKind::field_strength;
    CHECK(pulse_for(s, 0.02).e0 == 0.02);
}

TEST_CASE("single-point scan equals a direct run") {
    const ScanSpec s = ratio_spec({7.5});
    const ScanResult r = run_scan(s);
    REQUIRE(r.points.size() == 1);
    const RunResult direct = run_pipeline(s.target, pulse_for(s, 7.5), s.integrator, s.spectral);
    const ScanPoint& pt = r.points[0];
    CHECK(pt.norm_drift == direct.trajectory.norm_drift);
    REQUIRE(pt.table.size() == direct.table.size());
    for (std::size_t i = 0; i < pt.table.size(); ++i) {
        CHECK(pt.table[i].intensity == direct.table[i].intensity);
        CHECK(pt.table[i].phase_x == direct.table[i].phase_x);
    }
}

TEST_CASE("worker count, dispatch order and resume leave results bitwise unchanged") {
    const ScanSpec s = ratio_spec({2.0, 3.5, 5.0, 7.5, 9.0, 12.0});
    const std::string base = serialized(run_scan(s));

    ScanOptions many;
    many.workers = 4;
    CHECK(serialized(run_scan(s, many)) == base);

    ScanOptions shuffled;
    shuffled.workers = 3;
    shuffled.dispatch_order = {5, 2, 0, 4, 1, 3};
    CHECK(serialized(run_scan(s, shuffled)) == base);

    ScanOptions bad;
    bad.dispatch_order = {0, 0, 1, 2, 3, 4};
    CHECK_THROWS_AS(run_scan(s, bad), InvalidInput);

    const ScanResult full = run_scan(s);
    ScanOptions resume;
    resume.completed = {full.points[1], full.points[4]};
    std::set<double> computed;
    resume.on_point = [&](const ScanPoint& p) { computed.insert(p.value); };
    CHECK(serialized(run_scan(s, resume)) == base);
    CHECK(computed == std::set<double>{2.0, 5.0, 7.5, 12.0});
}

TEST_CASE("scan results are ordered by value for descending grids") {
    const ScanResult r = run_scan(ratio_spec({9.0, 4.0}));
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[0].value == 4.0);
    CHECK(r.points[1].value == 9.0);
}

TEST_CASE("a failing point aborts the scan and names the parameter") {
    ScanSpec s = ratio_spec({0.005, 0.01});
    s.kind = ScanKind::field_strength;
    s.integrator.norm_tolerance = 1e-30;
    ScanOptions o;
    o.workers = 2;
    CHECK_THROWS_WITH_AS(run_scan(s, o), doctest::Contains("scan point e0="), NumericalFailure);
}

TEST_CASE("field-strength scan: zero field is flat, stronger fields raise odd harmonics") {
    ScanSpec s = ratio_spec({});
    s.pulse.n_cycles = 60;
    s.grid = {0.0};
    const ScanResult zero = scan_field_strength(s);
    for (const YieldSample& y : zero.points[0].yield_curve) CHECK(y.yield == 0.0);

    s.grid.clear();
    const ScanResult r = scan_field_strength(s);
    REQUIRE(r.points.size() == 4);
    for (std::size_t row = 0; row < r.points[0].table.size(); ++row) {
        if (!r.points[0].table[row].valid) continue;
        for (std::size_t i = 1; i < r.points.size(); ++i)
            CHECK(r.points[i].table[row].intensity > r.points[i - 1].table[row].intensity);
    }
}

TEST_CASE("tls and the x block of the four-level system emit the same spectrum") {
    ScanSpec tls = ratio_spec({3.0, 7.5});
    ScanSpec four = tls;
    four.target.kind = TargetKind::four_level;
    four.kind = ScanKind::polarization_angle;
    four.grid = {0.0};
    for (double ratio : tls.grid) {
        four.pulse.omega_l = 0.1 / ratio;
        const ScanPoint a = evaluate_point(tls, ratio);
        const ScanPoint b = evaluate_point(four, 0.0);
        for (std::size_t i = 0; i < a.table.size(); ++i) {
            if (!a.table[i].valid) continue;
            CHECK(b.table[i].intensity == doctest::Approx(a.table[i].intensity).epsilon(1e-6));
            CHECK(std::abs(std::sin(0.5 * (b.table[i].phase_x - a.table[i].phase_x))) < 1e-6);
        }
    }
}

TEST_CASE("polarization scan end points follow the drive axis") {
    ScanSpec s = ratio_spec({0.0, 90.0});
    s.kind = ScanKind::polarization_angle;
    s.target.kind = TargetKind::four_level;
    const ScanResult r = run_scan(s);
    for (const HarmonicRow& row : r.points[0].table)
        if (row.valid) CHECK(row.alpha_n == 0.0);
    for (const HarmonicRow& row : r.points[1].table)
        if (row.valid) CHECK(std::abs(std::abs(row.alpha_n) - kPi / 2) < 1e-12);
}

TEST_CASE("yield downsampling keeps the cell maximum") {
    Spectrum s;
    for (int k = 0; k <= 100; ++k) {
        s.freqs.push_back(0.01 * k);
        s.yield_total.push_back(k == 37 ? 5.0 : 1.0);
    }
    s.dx_tilde.assign(101, 0.0);
    s.dy_tilde.assign(101, 0.0);
    const std::vector<YieldSample> c = downsample_yield(s, 0.1, 0.5, 10.0);
    REQUIRE(c.size() == 21);
    CHECK(c[7].harmonic == 3.5);
    CHECK(c[7].yield == 5.0);
    CHECK(c[6].yield == 1.0);

    // Cells finer than the bin spacing read the nearest bin.
    const std::vector<YieldSample> fine = downsample_yield(s, 0.1, 0.02, 4.0);
    CHECK(fine[185].yield == 5.0);
    CHECK(fine[186].yield == 5.0);
    CHECK(fine[188].yield == 1.0);
}
