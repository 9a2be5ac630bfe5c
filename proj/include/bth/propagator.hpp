#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bth/model.hpp"
#include "bth/pulse.hpp"

namespace bth {

struct IntegratorConfig {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    int samples_per_cycle = 128;
    std::optional<double> max_step;  ///< defaults to a tenth of the carrier period
    double norm_tolerance = 1e-8;    ///< integration fails above 100x this drift
};

void validate(const IntegratorConfig& cfg);

/// State amplitudes sampled on a uniform grid spanning the pulse.
struct Trajectory {
    std::vector<double> times;
    Eigen::MatrixXcd amplitudes;  ///< row m holds C(times[m])
    double norm_drift = 0.0;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Uniform grid of n_intervals + 1 points on [-T/2, T/2]. Points are placed
/// symmetrically about t = 0 so that t_m == -t_{M-1-m} holds exactly.
std::vector<double> centered_grid(double duration, long n_intervals);

/// Integrates i dC/dt = H(t) C with adaptive Dormand-Prince 5(4) and samples
/// C on `samples_per_cycle` points per carrier period via dense output.
/// Throws NumericalFailure on step-size underflow or excessive norm drift.
Trajectory propagate(const LevelSystem& system, const LaserPulse& pulse,
                     const IntegratorConfig& cfg = {});

/// Same integration, sampled on an explicit ascending grid inside the pulse.
Trajectory propagate_on(const LevelSystem& system, const LaserPulse& pulse,
                        const IntegratorConfig& cfg, std::vector<double> times);

enum class OracleScheme {
    midpoint,  ///< exp(-i H(t+dt/2) dt), second order
    magnus4,   ///< two-exponential commutator-free Magnus at Gauss nodes, fourth order
};

/// Reference propagator built from products of exact matrix exponentials of
/// piecewise-frozen Hamiltonians. Unitary by construction. Systems whose
/// coupling graph splits into blocks of at most two levels use closed-form
/// 2x2 exponentials; larger blocks fall back to a Hermitian eigensolver.
/// `dt` is rounded down so that a whole number of steps spans the pulse.
Trajectory propagate_oracle(const LevelSystem& system, const LaserPulse& pulse, double dt,
                            OracleScheme scheme = OracleScheme::magnus4);

/// Applies exp(-i H h) to `state` in place for a real symmetric H.
void apply_exponential(const Eigen::MatrixXd& h_matrix, double h, Eigen::VectorXcd& state);

}  // namespace bth
