#pragma once

#include <Eigen/Dense>

#include "pcons/errors.hpp"

namespace pcons {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class SignKind { nonneg, nonpos };

/// Result of the frequency sweep min over w >= 0 of sigma_min(A_c - j*w*I).
struct SweepResult {
  double min_sigma = 0.0;    // smallest singular value found
  double argmin_omega = 0.0; // frequency attaining it
  int grid_points = 0;       // coarse grid size used
  bool refined = false;      // golden-section refinement ran
};

/// Throws InvariantError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* who);

/// True iff every off-diagonal entry of the square matrix M is >= -tol.
/// Diagonal entries are unconstrained.
bool is_metzler(const Matrix& m, double tol = 1e-9);

/// Elementwise sign test with tolerance: nonneg means all entries >= -tol,
/// nonpos means all entries <= tol.
bool is_elementwise_sign(const Matrix& m, SignKind sign, double tol = 1e-9);

/// Largest singular value (induced 2-norm).
double spectral_norm(const Matrix& m);

/// Tests min eig of the symmetrized matrix (S + S^T)/2 against tol (strict >).
bool is_positive_definite(const Matrix& s, double tol = 0.0);

/// Largest eigenvalue of the symmetrized matrix (S + S^T)/2.
double max_eig_symmetric(const Matrix& s);

/// Evaluates sigma_min(A_c - j*w*I) on a coarse grid over [0, omega_max] and
/// golden-section refines around the grid minimum down to refine_tol in w.
/// For w > ||A_c|| the value grows at least like w - ||A_c||, so
/// omega_max = ||A_c|| + margin covers the global minimum.
SweepResult min_singular_sweep(const Matrix& a_c, double omega_max,
                               int coarse_points = 256, double refine_tol = 1e-6);

/// Convenience: sigma_min(A_c - j*w*I) at a single frequency.
double sigma_min_at(const Matrix& a_c, double omega);

/// Solves (A-EC)^T P + P (A-EC) + kappa^2 P P + (1+delta) I = 0 for the
/// symmetric positive definite stabilizing P, via the stable invariant
/// subspace of the Hamiltonian [[A-EC, kappa^2 I], [-(1+delta) I, -(A-EC)^T]].
/// Throws InfeasibleError when the Hamiltonian has eigenvalues on the
/// imaginary axis (no stabilizing solution; choose a different E).
Matrix solve_observer_riccati(const Matrix& a, const Matrix& e, const Matrix& c,
                              double kappa, double delta);

/// Same solve, starting from the already-formed closed-loop matrix F = A-EC.
Matrix solve_riccati_closed_loop(const Matrix& f, double kappa, double delta);

}  // namespace pcons
