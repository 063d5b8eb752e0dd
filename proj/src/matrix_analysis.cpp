#include "pcons/matrix_analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <string>

namespace pcons {

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw InvariantError(std::string(who) + ": matrix has NaN or infinite entries");
  }
}

static void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(who) + ": expected square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

bool is_metzler(const Matrix& m, double tol) {
  require_square(m, "is_metzler");
  require_finite(m, "is_metzler");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) < -tol) return false;
    }
  }
  return true;
}

bool is_elementwise_sign(const Matrix& m, SignKind sign, double tol) {
  require_finite(m, "is_elementwise_sign");
  if (sign == SignKind::nonneg) return (m.array() >= -tol).all();
  return (m.array() <= tol).all();
}

double spectral_norm(const Matrix& m) {
  require_finite(m, "spectral_norm");
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

bool is_positive_definite(const Matrix& s, double tol) {
  require_square(s, "is_positive_definite");
  require_finite(s, "is_positive_definite");
  Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > tol;
}

double max_eig_symmetric(const Matrix& s) {
  require_square(s, "max_eig_symmetric");
  require_finite(s, "max_eig_symmetric");
  Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double sigma_min_at(const Matrix& a_c, double omega) {
  require_square(a_c, "sigma_min_at");
  Eigen::MatrixXcd shifted = a_c.cast<std::complex<double>>();
  shifted.diagonal().array() -= std::complex<double>(0.0, omega);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
  return svd.singularValues()(shifted.rows() - 1);
}

SweepResult min_singular_sweep(const Matrix& a_c, double omega_max,
                               int coarse_points, double refine_tol) {
  require_square(a_c, "min_singular_sweep");
  require_finite(a_c, "min_singular_sweep");
  if (omega_max <= 0.0) throw ParameterError("min_singular_sweep: omega_max must be positive");
  if (coarse_points < 2) throw ParameterError("min_singular_sweep: need at least 2 grid points");

  int best = 0;
  double best_val = sigma_min_at(a_c, 0.0);
  const double dw = omega_max / (coarse_points - 1);
  for (int k = 1; k < coarse_points; ++k) {
    double v = sigma_min_at(a_c, k * dw);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }

  // Golden-section refinement on the bracket around the best grid sample.
  double lo = (best > 0) ? (best - 1) * dw : 0.0;
  double hi = (best < coarse_points - 1) ? (best + 1) * dw : omega_max;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = sigma_min_at(a_c, x1);
  double f2 = sigma_min_at(a_c, x2);
  while (hi - lo > refine_tol) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = sigma_min_at(a_c, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = sigma_min_at(a_c, x2);
    }
  }

  SweepResult result;
  result.grid_points = coarse_points;
  result.refined = true;
  double mid = 0.5 * (lo + hi);
  double fm = sigma_min_at(a_c, mid);
  result.min_sigma = fm;
  result.argmin_omega = mid;
  if (f1 < result.min_sigma) {
    result.min_sigma = f1;
    result.argmin_omega = x1;
  }
  if (f2 < result.min_sigma) {
    result.min_sigma = f2;
    result.argmin_omega = x2;
  }
  if (best_val < result.min_sigma) {
    result.min_sigma = best_val;
    result.argmin_omega = best * dw;
  }
  return result;
}

Matrix solve_riccati_closed_loop(const Matrix& f, double kappa, double delta) {
  require_square(f, "solve_observer_riccati");
  require_finite(f, "solve_observer_riccati");
  if (kappa < 0.0) throw ParameterError("solve_observer_riccati: kappa must be >= 0");
  const Eigen::Index m = f.rows();

  Matrix ham(2 * m, 2 * m);
  ham.topLeftCorner(m, m) = f;
  ham.topRightCorner(m, m) = kappa * kappa * Matrix::Identity(m, m);
  ham.bottomLeftCorner(m, m) = -(1.0 + delta) * Matrix::Identity(m, m);
  ham.bottomRightCorner(m, m) = -f.transpose();

  Eigen::EigenSolver<Matrix> es(ham);
  if (es.info() != Eigen::Success) {
    throw InfeasibleError("solve_observer_riccati: Hamiltonian eigendecomposition failed");
  }

  // The Hamiltonian spectrum is symmetric about the imaginary axis; a
  // stabilizing solution exists only when no eigenvalue sits on it.
  const double axis_tol = 1e-9 * std::max(1.0, ham.norm());
  Eigen::MatrixXcd basis(2 * m, m);
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < 2 * m; ++k) {
    double re = es.eigenvalues()(k).real();
    if (std::abs(re) <= axis_tol) {
      throw InfeasibleError(
          "solve_observer_riccati: Hamiltonian eigenvalue on the imaginary axis; "
          "no stabilizing solution -- choose E with a larger sweep margin");
    }
    if (re < 0.0) {
      if (count == m) {
        throw InfeasibleError("solve_observer_riccati: stable subspace dimension exceeds state size");
      }
      basis.col(count++) = es.eigenvectors().col(k);
    }
  }
  if (count != m) {
    throw InfeasibleError("solve_observer_riccati: stable subspace has wrong dimension");
  }

  Eigen::MatrixXcd u1 = basis.topRows(m);
  Eigen::MatrixXcd u2 = basis.bottomRows(m);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(u1);
  if (!lu.isInvertible()) {
    throw InfeasibleError("solve_observer_riccati: stable subspace is not a graph over the state space");
  }
  Matrix p = (u2 * lu.inverse()).real();
  p = 0.5 * (p + p.transpose());

  Matrix residual = f.transpose() * p + p * f + kappa * kappa * p * p +
                    (1.0 + delta) * Matrix::Identity(m, m);
  if (spectral_norm(residual) > 1e-9 * std::max(1.0, p.norm())) {
    throw InfeasibleError("solve_observer_riccati: residual exceeds tolerance");
  }
  if (!is_positive_definite(p, 0.0)) {
    throw InfeasibleError("solve_observer_riccati: solution is not positive definite");
  }
  return p;
}

Matrix solve_observer_riccati(const Matrix& a, const Matrix& e, const Matrix& c,
                              double kappa, double delta) {
  if (a.rows() != a.cols()) throw DimensionError("solve_observer_riccati: A must be square");
  if (e.rows() != a.rows() || c.cols() != a.cols() || e.cols() != c.rows()) {
    throw DimensionError("solve_observer_riccati: incompatible A/E/C dimensions");
  }
  return solve_riccati_closed_loop(a - e * c, kappa, delta);
}

}  // namespace pcons
