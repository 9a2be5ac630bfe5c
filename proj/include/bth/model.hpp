#pragma once

#include <Eigen/Dense>

namespace bth {

/// Cartesian laser field sample, atomic units.
struct Field {
    double x = 0.0;
    double y = 0.0;
};

/// Few-level system: field-free energies on the diagonal plus one real
/// symmetric dipole coupling matrix per polarization axis.
///
/// Instances are only produced through make_level_system() and the
/// builders below, which enforce the invariants:
///   - couplings are square, exactly symmetric and match the level count,
///   - energies are finite and at least one off-diagonal coupling is nonzero,
///   - the initial state has nonzero norm.
struct LevelSystem {
    Eigen::VectorXd energies;
    Eigen::MatrixXd coupling_x;
    Eigen::MatrixXd coupling_y;
    Eigen::VectorXcd initial_state;

    [[nodiscard]] int n_levels() const { return static_cast<int>(energies.size()); }
};

LevelSystem make_level_system(Eigen::VectorXd energies, Eigen::MatrixXd coupling_x,
                              Eigen::MatrixXd coupling_y, Eigen::VectorXcd initial_state);

/// Two-level system with energies (-omega10/2, +omega10/2), an x-polarized
/// transition dipole `d`, starting in the ground state.
LevelSystem build_tls(double omega10, double d);

/// Two uncoupled two-level systems. Levels {1,2} form the x-polarized
/// subsystem with splitting omega21x, levels {0,3} the y-polarized one with
/// splitting omega30y. The initial state is (1,1,0,0), optionally scaled to
/// unit norm.
LevelSystem build_four_level(double omega21x, double omega30y, double d,
                             bool normalize_initial_state = false);

/// diag(energies) + E_x * coupling_x + E_y * coupling_y.
Eigen::MatrixXcd hamiltonian_at(const LevelSystem& system, Field field);

/// Real-valued form of hamiltonian_at(), written into `out` without allocating
/// when `out` already has the right shape.
void real_hamiltonian_at(const LevelSystem& system, Field field, Eigen::MatrixXd& out);

}  // namespace bth
