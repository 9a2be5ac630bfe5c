#include "bth/model.hpp"

#include <cmath>
#include <string>

#include "bth/errors.hpp"

namespace bth {

namespace {

void check_coupling(const Eigen::MatrixXd& c, Eigen::Index n, const char* name) {
    if (c.rows() != n || c.cols() != n) {
        throw InvalidInput(std::string(name) + ": expected " + std::to_string(n) + "x" +
                           std::to_string(n) + " matrix");
    }
    if (!c.allFinite()) throw InvalidInput(std::string(name) + ": non-finite entry");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (c(i, j) != c(j, i)) {
                throw InvalidInput(std::string(name) + ": matrix is not symmetric at (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
}

bool has_off_diagonal(const Eigen::MatrixXd& c) {
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            if (i != j && c(i, j) != 0.0) return true;
    return false;
}

}  // namespace

LevelSystem make_level_system(Eigen::VectorXd energies, Eigen::MatrixXd coupling_x,
                              Eigen::MatrixXd coupling_y, Eigen::VectorXcd initial_state) {
    const Eigen::Index n = energies.size();
    if (n < 2) throw InvalidInput("energies: at least two levels are required");
    if (!energies.allFinite()) throw InvalidInput("energies: non-finite entry");
    check_coupling(coupling_x, n, "coupling_x");
    check_coupling(coupling_y, n, "coupling_y");
    if (!has_off_diagonal(coupling_x) && !has_off_diagonal(coupling_y)) {
        throw InvalidInput("coupling: no off-diagonal dipole element, system is uncoupled");
    }
    if (initial_state.size() != n) {
        throw InvalidInput("initial_state: expected length " + std::to_string(n));
    }
    if (!initial_state.allFinite() || initial_state.norm() == 0.0) {
        throw InvalidInput("initial_state: must be finite with nonzero norm");
    }
    return LevelSystem{std::move(energies), std::move(coupling_x), std::move(coupling_y),
                       std::move(initial_state)};
}

LevelSystem build_tls(double omega10, double d) {
    if (!(omega10 > 0.0) || !std::isfinite(omega10))
        throw InvalidInput("omega10: must be a positive finite frequency");
    if (d == 0.0 || !std::isfinite(d)) throw InvalidInput("d: must be finite and nonzero");

    Eigen::VectorXd energies(2);
    energies << -omega10 / 2.0, omega10 / 2.0;
    Eigen::MatrixXd cx = Eigen::MatrixXd::Zero(2, 2);
    cx(0, 1) = cx(1, 0) = d;
    Eigen::VectorXcd c0 = Eigen::VectorXcd::Zero(2);
    c0(0) = 1.0;
    return make_level_system(std::move(energies), std::move(cx), Eigen::MatrixXd::Zero(2, 2),
                             std::move(c0));
}

LevelSystem build_four_level(double omega21x, double omega30y, double d,
                             bool normalize_initial_state) {
    if (!(omega21x > 0.0) || !std::isfinite(omega21x))
        throw InvalidInput("omega21x: must be a positive finite frequency");
    if (!(omega30y > 0.0) || !std::isfinite(omega30y))
        throw InvalidInput("omega30y: must be a positive finite frequency");
    if (d == 0.0 || !std::isfinite(d)) throw InvalidInput("d: must be finite and nonzero");

    Eigen::VectorXd energies(4);
    energies << -omega30y / 2.0, -omega21x / 2.0, omega21x / 2.0, omega30y / 2.0;
    Eigen::MatrixXd cx = Eigen::MatrixXd::Zero(4, 4);
    Eigen::MatrixXd cy = Eigen::MatrixXd::Zero(4, 4);
    cx(1, 2) = cx(2, 1) = d;
    cy(0, 3) = cy(3, 0) = d;
    Eigen::VectorXcd c0 = Eigen::VectorXcd::Zero(4);
    c0(0) = 1.0;
    c0(1) = 1.0;
    if (normalize_initial_state) c0 /= std::sqrt(2.0);
    return make_level_system(std::move(energies), std::move(cx), std::move(cy), std::move(c0));
}

void real_hamiltonian_at(const LevelSystem& system, Field field, Eigen::MatrixXd& out) {
    out.noalias() = field.x * system.coupling_x;
    out.noalias() += field.y * system.coupling_y;
    out.diagonal() += system.energies;
}

Eigen::MatrixXcd hamiltonian_at(const LevelSystem& system, Field field) {
    if (!std::isfinite(field.x) || !std::isfinite(field.y))
        throw InvalidInput("field: components must be finite");
    Eigen::MatrixXd h(system.n_levels(), system.n_levels());
    real_hamiltonian_at(system, field, h);
    return h.cast<std::complex<double>>();
}

}  // namespace bth
