#include "bth/propagator.hpp"

#include <cmath>
#include <complex>
#include <numeric>
#include <string>

#include "bth/dopri5.hpp"
#include "bth/errors.hpp"

namespace bth {

namespace {

using cd = std::complex<double>;

double norm_drift_of(const Eigen::MatrixXcd& amps) {
    if (amps.rows() == 0) return 0.0;
    const double n0 = amps.row(0).squaredNorm();
    double drift = 0.0;
    for (Eigen::Index m = 1; m < amps.rows(); ++m)
        drift = std::max(drift, std::abs(amps.row(m).squaredNorm() - n0));
    return drift;
}

void check_inputs(const LevelSystem& system, const LaserPulse& pulse) {
    validate(pulse);
    if (system.n_levels() < 2 || system.initial_state.size() != system.n_levels())
        throw InvalidInput("system: inconsistent level system");
}

long steps_for(double duration, double dt) {
    const double ratio = duration / dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * ratio) return static_cast<long>(nearest);
    return static_cast<long>(std::ceil(ratio));
}

// Connected components of the off-diagonal sparsity pattern of h.
std::vector<std::vector<Eigen::Index>> coupled_blocks(const Eigen::MatrixXd& h) {
    const Eigen::Index n = h.rows();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    auto find = [&](Eigen::Index i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (h(i, j) != 0.0) parent[find(i)] = find(j);

    std::vector<std::vector<Eigen::Index>> blocks;
    std::vector<long> slot(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(blocks.size());
            blocks.emplace_back();
        }
        blocks[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    return blocks;
}

}  // namespace

void validate(const IntegratorConfig& cfg) {
    if (!(cfg.rel_tol > 0.0) || !std::isfinite(cfg.rel_tol))
        throw InvalidInput("integrator.rel_tol: must be positive");
    if (!(cfg.abs_tol > 0.0) || !std::isfinite(cfg.abs_tol))
        throw InvalidInput("integrator.abs_tol: must be positive");
    if (cfg.samples_per_cycle < 2) throw InvalidInput("integrator.samples_per_cycle: must be >= 2");
    if (cfg.max_step && !(*cfg.max_step > 0.0))
        throw InvalidInput("integrator.max_step: must be positive");
    if (!(cfg.norm_tolerance > 0.0)) throw InvalidInput("integrator.norm_tolerance: must be positive");
}

std::vector<double> centered_grid(double duration, long n_intervals) {
    if (n_intervals < 1) throw InvalidInput("grid: need at least one interval");
    const double dt = duration / static_cast<double>(n_intervals);
    const double half = 0.5 * static_cast<double>(n_intervals);
    std::vector<double> times(static_cast<std::size_t>(n_intervals) + 1);
    for (std::size_t m = 0; m < times.size(); ++m) times[m] = (static_cast<double>(m) - half) * dt;
    return times;
}

Trajectory propagate(const LevelSystem& system, const LaserPulse& pulse, const IntegratorConfig& cfg) {
    validate(cfg);
    check_inputs(system, pulse);
    const long n_intervals = static_cast<long>(pulse.n_cycles) * cfg.samples_per_cycle;
    return propagate_on(system, pulse, cfg, centered_grid(pulse.duration(), n_intervals));
}

Trajectory propagate_on(const LevelSystem& system, const LaserPulse& pulse,
                        const IntegratorConfig& cfg, std::vector<double> times) {
    validate(cfg);
    check_inputs(system, pulse);
    if (times.size() < 2) throw InvalidInput("grid: need at least two output times");
    for (std::size_t m = 1; m < times.size(); ++m)
        if (!(times[m] > times[m - 1])) throw InvalidInput("grid: times must be strictly increasing");

    const Eigen::Index n = system.n_levels();
    Trajectory traj;
    traj.amplitudes.resize(static_cast<Eigen::Index>(times.size()), n);

    Eigen::MatrixXd h(n, n);
    auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt) {
        real_hamiltonian_at(system, field_at(pulse, t), h);
        dydt.noalias() = h.cast<cd>() * y;
        dydt *= cd(0.0, -1.0);
    };
    auto observe = [&](std::size_t m, const Eigen::VectorXcd& y) {
        traj.amplitudes.row(static_cast<Eigen::Index>(m)) = y.transpose();
    };

    Dopri5Options opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_step = cfg.max_step.value_or(pulse.period() / 10.0);
    integrate_dopri5(rhs, times.front(), times.back(), system.initial_state, times, observe, opt);

    traj.times = std::move(times);
    traj.norm_drift = norm_drift_of(traj.amplitudes);
    if (!(traj.norm_drift <= 100.0 * cfg.norm_tolerance)) {
        throw NumericalFailure("integration failure: norm drift " + std::to_string(traj.norm_drift) +
                               " exceeds 100x the configured tolerance");
    }
    return traj;
}

void apply_exponential(const Eigen::MatrixXd& hm, double h, Eigen::VectorXcd& state) {
    for (const auto& block : coupled_blocks(hm)) {
        if (block.size() == 1) {
            const Eigen::Index i = block[0];
            state[i] *= std::polar(1.0, -hm(i, i) * h);
        } else if (block.size() == 2) {
            // H = m I + delta sz + b sx  =>  exp(-iHh) = e^{-imh}(cos(rh) - i sin(rh)/r (delta sz + b sx))
            const Eigen::Index i = block[0], j = block[1];
            const double mean = 0.5 * (hm(i, i) + hm(j, j));
            const double delta = 0.5 * (hm(i, i) - hm(j, j));
            const double b = hm(i, j);
            const double r = std::hypot(delta, b);
            const double c = std::cos(r * h);
            const double s = r > 0.0 ? std::sin(r * h) / r : h;
            const cd ph = std::polar(1.0, -mean * h);
            const cd u00 = ph * cd(c, -s * delta);
            const cd u11 = ph * cd(c, s * delta);
            const cd u01 = ph * cd(0.0, -s * b);
            const cd a = state[i], bb = state[j];
            state[i] = u00 * a + u01 * bb;
            state[j] = u01 * a + u11 * bb;
        } else {
            const auto k = static_cast<Eigen::Index>(block.size());
            Eigen::MatrixXd sub(k, k);
            Eigen::VectorXcd v(k);
            for (Eigen::Index p = 0; p < k; ++p) {
                v[p] = state[block[p]];
                for (Eigen::Index q = 0; q < k; ++q) sub(p, q) = hm(block[p], block[q]);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
            const Eigen::MatrixXd& vecs = es.eigenvectors();
            Eigen::VectorXcd w = vecs.transpose().cast<cd>() * v;
            for (Eigen::Index p = 0; p < k; ++p) w[p] *= std::polar(1.0, -es.eigenvalues()[p] * h);
            v = vecs.cast<cd>() * w;
            for (Eigen::Index p = 0; p < k; ++p) state[block[p]] = v[p];
        }
    }
}

Trajectory propagate_oracle(const LevelSystem& system, const LaserPulse& pulse, double dt,
                            OracleScheme scheme) {
    check_inputs(system, pulse);
    if (!(dt > 0.0) || dt > pulse.period() / 1000.0)
        throw InvalidInput("oracle.dt: must be positive and at most a thousandth of the carrier period");

    const long n_steps = steps_for(pulse.duration(), dt);
    Trajectory traj;
    traj.times = centered_grid(pulse.duration(), n_steps);
    const Eigen::Index n = system.n_levels();
    traj.amplitudes.resize(static_cast<Eigen::Index>(traj.times.size()), n);

    Eigen::VectorXcd state = system.initial_state;
    traj.amplitudes.row(0) = state.transpose();
    Eigen::MatrixXd h1(n, n), h2(n, n);

    // Gauss-Legendre nodes and the commutator-free fourth-order weights.
    const double gs = std::sqrt(3.0) / 6.0;
    const double w1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;
    const double w2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;

    for (long k = 0; k < n_steps; ++k) {
        const double t = traj.times[static_cast<std::size_t>(k)];
        const double step = traj.times[static_cast<std::size_t>(k) + 1] - t;
        if (scheme == OracleScheme::midpoint) {
            real_hamiltonian_at(system, field_at(pulse, t + 0.5 * step), h1);
            apply_exponential(h1, step, state);
        } else {
            const Field fa = field_at(pulse, t + (0.5 - gs) * step);
            const Field fb = field_at(pulse, t + (0.5 + gs) * step);
            // First factor applied: w2*H(ta) + w1*H(tb); then w1*H(ta) + w2*H(tb).
            real_hamiltonian_at(system, {w2 * fa.x + w1 * fb.x, w2 * fa.y + w1 * fb.y}, h1);
            h1.diagonal() -= (1.0 - (w1 + w2)) * system.energies;
            real_hamiltonian_at(system, {w1 * fa.x + w2 * fb.x, w1 * fa.y + w2 * fb.y}, h2);
            h2.diagonal() -= (1.0 - (w1 + w2)) * system.energies;
            apply_exponential(h1, step, state);
            apply_exponential(h2, step, state);
        }
        traj.amplitudes.row(k + 1) = state.transpose();
    }
    traj.norm_drift = norm_drift_of(traj.amplitudes);
    return traj;
}

}  // namespace bth
