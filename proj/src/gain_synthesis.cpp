#include "pcons/gain_synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pcons {

std::string variant_name(Variant v) {
  return v == Variant::theorem1 ? "theorem1" : "theorem2";
}

double PlantModel::kappa() const { return beta * spectral_norm(H); }

void validate_plant(const PlantModel& plant) {
  const Eigen::Index m = plant.A.rows();
  if (plant.A.cols() != m) throw DimensionError("plant: A must be square");
  if (plant.H.rows() != m || plant.H.cols() != m) throw DimensionError("plant: H must match A");
  if (plant.B.rows() != m) throw DimensionError("plant: B row count must match A");
  if (plant.C.cols() != m) throw DimensionError("plant: C column count must match A");
  require_finite(plant.A, "plant.A");
  require_finite(plant.H, "plant.H");
  require_finite(plant.B, "plant.B");
  require_finite(plant.C, "plant.C");
  if (plant.beta < 0.0) throw InvariantError("plant: beta must be >= 0");
  if (!(plant.m_l >= 0.0 && plant.m_l <= plant.m_h) || !std::isfinite(plant.m_h)) {
    throw InvariantError("plant: sector bounds must satisfy 0 <= m_l <= m_h < inf");
  }
  if (!is_metzler(plant.A)) throw InvariantError("plant: A must be Metzler");
}

void validate_config(const SynthesisConfig& cfg) {
  if (cfg.eta <= 0.0 || cfg.phi <= 0.0 || cfg.mu <= 0.0 || cfg.delta <= 0.0) {
    throw InvariantError("constants: eta, phi, mu, delta must be strictly positive");
  }
  if (cfg.s_bar < 0.0) throw InvariantError("constants: s_bar must be >= 0");
  if (cfg.pi_min <= 0.0 || cfg.pi_max < cfg.pi_min) {
    throw ParameterError("search: need 0 < pi_min <= pi_max");
  }
  if (cfg.e_iterations < 1 || cfg.max_outer < 1 || cfg.pi_grid < 2) {
    throw ParameterError("search: iteration counts out of range");
  }
}

bool PositivityReport::all_pass(bool include_informational) const {
  for (const auto& cert : certificates) {
    if (cert.informational && !include_informational) continue;
    if (!cert.pass) return false;
  }
  return true;
}

const Certificate* PositivityReport::find(const std::string& name) const {
  for (const auto& cert : certificates) {
    if (cert.name == name) return &cert;
  }
  return nullptr;
}

bool is_observable(const Matrix& a, const Matrix& c) {
  const Eigen::Index m = a.rows();
  const Eigen::Index q = c.rows();
  Matrix obs(q * m, m);
  Matrix block = c;
  for (Eigen::Index k = 0; k < m; ++k) {
    obs.middleRows(k * q, q) = block;
    block = block * a;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(obs);
  return qr.rank() == m;
}

namespace {

double max_real_eig(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

std::string check_candidate(const PlantModel& plant, const Matrix& e, double kappa,
                            double* margin_out) {
  Matrix closed = plant.A - e * plant.C;
  if (!is_metzler(closed)) return "A-EC not Metzler";
  double re = max_real_eig(closed);
  if (re >= 0.0) return "A-EC unstable (max Re eig = " + std::to_string(re) + ")";
  double omega_max = spectral_norm(closed) + kappa + 1.0;
  SweepResult sweep = min_singular_sweep(closed, omega_max);
  double margin = sweep.min_sigma - kappa;
  if (margin_out) *margin_out = margin;
  if (margin <= 0.0) {
    return "sweep minimum " + std::to_string(sweep.min_sigma) + " does not clear beta*||H|| = " +
           std::to_string(kappa);
  }
  return {};
}

}  // namespace

Matrix observer_init(const PlantModel& plant, const std::vector<Matrix>& candidates,
                     ObserverInitReport* report) {
  validate_plant(plant);
  if (!is_observable(plant.A, plant.C)) {
    throw InfeasibleError("observer_init: (A, C) is not observable");
  }
  const double kappa = plant.kappa();
  std::vector<std::string> rejected;

  auto try_one = [&](const Matrix& e, int index) -> bool {
    if (e.rows() != plant.A.rows() || e.cols() != plant.C.rows()) {
      rejected.push_back("candidate " + std::to_string(index) + ": wrong dimensions");
      return false;
    }
    double margin = 0.0;
    std::string failure = check_candidate(plant, e, kappa, &margin);
    if (!failure.empty()) {
      rejected.push_back("candidate " + std::to_string(index) + ": " + failure);
      return false;
    }
    if (report) {
      report->chosen_index = index;
      report->sweep_margin = margin;
      report->rejected = rejected;
    }
    return true;
  };

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (try_one(candidates[k], static_cast<int>(k))) return candidates[k];
  }

  // Scan fallback: E = (A + s I) C^-1 places A - EC = -s I, which clears every
  // Lemma-3 test once s exceeds beta*||H||. Needs square invertible C.
  if (plant.C.rows() == plant.C.cols()) {
    Eigen::FullPivLU<Matrix> lu(plant.C);
    if (lu.isInvertible()) {
      Matrix c_inv = lu.inverse();
      for (int step = 1; step <= 10; ++step) {
        Matrix e = (plant.A + (kappa + step) * Matrix::Identity(plant.states(), plant.states())) * c_inv;
        if (try_one(e, -step)) return e;
      }
    } else {
      rejected.push_back("scan: C is singular, pole-placement scan unavailable");
    }
  } else {
    rejected.push_back("scan: C is not square, pole-placement scan unavailable");
  }

  std::ostringstream msg;
  msg << "observer_init: no candidate satisfies the Lemma-3 tests";
  for (const auto& line : rejected) msg << "\n  " << line;
  throw InfeasibleError(msg.str());
}

Matrix compute_sigma(const PlantModel& plant, const Matrix& e, const Matrix& p) {
  validate_plant(plant);
  if (!is_positive_definite(p, 0.0)) {
    throw ParameterError("compute_sigma: P must be symmetric positive definite");
  }
  Matrix closed = plant.A - e * plant.C;
  const double kappa = plant.kappa();
  return closed.transpose() * p + p * closed + kappa * kappa * p * p +
         Matrix::Identity(p.rows(), p.cols());
}

double gamma_from_parts(const SynthesisConfig& cfg, const PlantModel& plant,
                        double connectivity_ld, double lambda_i, double f_i, int d_i) {
  if (f_i <= 0.0) throw StructureError("gamma: f_i must be strictly positive");
  const double pin_factor = 1.0 + cfg.s_bar * (d_i ? 1.0 : 0.0);
  const double spread = plant.m_h - plant.m_l;
  return cfg.phi * pin_factor * connectivity_ld * plant.m_bar() * cfg.eta -
         lambda_i / f_i - cfg.eta * cfg.eta * spread * spread / (4.0 * f_i);
}

Vector gamma_coefficients(const SynthesisConfig& cfg, const PlantModel& plant,
                          const NetworkData& net, Variant /*variant*/) {
  const int n = net.graph.size();
  Vector gamma(n);
  for (int i = 0; i < n; ++i) {
    gamma(i) = gamma_from_parts(cfg, plant, net.connectivity_ld, net.spectral.gamma_lap_eigs(i),
                                net.spectral.f(i), net.pinning.d[i]);
  }
  return gamma;
}

Matrix assemble_lmi(int node, const Matrix& e, const Matrix& pi, const PlantModel& plant,
                    double gamma_i, double f_i, int d_i, const Matrix& sigma,
                    const SynthesisConfig& cfg, Variant variant) {
  const Eigen::Index m = plant.A.rows();
  if (pi.rows() != m || pi.cols() != m || sigma.rows() != m || sigma.cols() != m) {
    throw DimensionError("assemble_lmi: Pi/Sigma must be m x m");
  }
  if (e.rows() != m || e.cols() != plant.C.rows()) {
    throw DimensionError("assemble_lmi: E must be m x q");
  }
  (void)node;

  Matrix coupling = e * plant.C;
  if (variant == Variant::theorem2) coupling *= cfg.mu * (d_i ? 1.0 : 0.0);

  Matrix ah = plant.A + plant.H;
  Matrix tl = ah * pi + pi * ah.transpose() - gamma_i * plant.B * plant.B.transpose() +
              pi * (sigma / f_i) * pi;
  Matrix tr = (coupling + plant.H) * pi;
  Matrix closed = (plant.A - coupling) * pi;
  Matrix br = closed + closed.transpose();

  Matrix block(2 * m, 2 * m);
  block.topLeftCorner(m, m) = tl;
  block.topRightCorner(m, m) = tr;
  block.bottomLeftCorner(m, m) = tr.transpose();
  block.bottomRightCorner(m, m) = br;
  return 0.5 * (block + block.transpose());
}

namespace {

struct AlphaEval {
  double alpha = -std::numeric_limits<double>::infinity();
  int argmax_node = 0;
  Vector top_vector;  // eigenvector of the argmax block
};

AlphaEval evaluate_alpha(const Matrix& e, const Matrix& pi, const PlantModel& plant,
                         const NetworkData& net, const SynthesisConfig& cfg, const Matrix& sigma,
                         Variant variant, const Vector& gamma) {
  AlphaEval eval;
  const int n = net.graph.size();
  for (int i = 0; i < n; ++i) {
    Matrix block = assemble_lmi(i, e, pi, plant, gamma(i), net.spectral.f(i), net.pinning.d[i],
                                sigma, cfg, variant);
    Eigen::SelfAdjointEigenSolver<Matrix> es(block);
    const Eigen::Index last = block.rows() - 1;
    double top = es.eigenvalues()(last);
    if (top > eval.alpha) {
      eval.alpha = top;
      eval.argmax_node = i;
      eval.top_vector = es.eigenvectors().col(last);
    }
  }
  return eval;
}

}  // namespace

double lmi_alpha(const Matrix& e, const Matrix& pi, const PlantModel& plant,
                 const NetworkData& net, const SynthesisConfig& cfg, const Matrix& sigma,
                 Variant variant) {
  Vector gamma = gamma_coefficients(cfg, plant, net, variant);
  return evaluate_alpha(e, pi, plant, net, cfg, sigma, variant, gamma).alpha;
}

namespace {

void append_metzler_cert(PositivityReport& report, const std::string& name, const Matrix& m,
                         double tol, const std::string& where_prefix, bool informational = false) {
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r == c) continue;
      if (m(r, c) < worst) {
        worst = m(r, c);
        where = where_prefix + "(" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ")";
      }
    }
  }
  if (!std::isfinite(worst)) worst = 0.0;  // 1x1 matrices have no off-diagonal
  report.certificates.push_back({name, worst >= -tol, worst, where, informational});
}

// Requires Q <= 0 elementwise, stated as min(-Q) >= -tol.
void append_nonpos_cert(PositivityReport& report, const std::string& name, const Matrix& q,
                        double tol, const std::string& where_prefix, bool informational = false) {
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      if (-q(r, c) < worst) {
        worst = -q(r, c);
        where = where_prefix + "(" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ")";
      }
    }
  }
  report.certificates.push_back({name, worst >= -tol, worst, where, informational});
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

PositivityReport positivity_check(const Matrix& e, const Matrix& pi, const PlantModel& plant,
                                  const NetworkData& net, const SynthesisConfig& cfg,
                                  Variant variant, double tol) {
  validate_plant(plant);
  Eigen::FullPivLU<Matrix> lu(pi);
  if (!lu.isInvertible()) throw ParameterError("positivity_check: Pi is singular");
  Matrix pi_inv = lu.inverse();

  const int n = net.graph.size();
  const Matrix& lap = net.spectral.laplacian;
  const Matrix bbt = plant.B * plant.B.transpose();
  const Matrix ec = e * plant.C;
  const double lead = cfg.phi * 0.5 * plant.m_bar() * cfg.eta;

  PositivityReport report;

  // Per-node closed-loop Metzler condition; theorem2 uses V B B^T V.
  {
    Matrix shape = (variant == Variant::theorem1) ? Matrix(bbt * pi_inv)
                                                  : Matrix(pi_inv * bbt * pi_inv);
    double worst = std::numeric_limits<double>::infinity();
    std::string where;
    for (int i = 0; i < n; ++i) {
      Matrix m = plant.A - lead * (lap(i, i) - net.pinning.d[i]) * shape;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          if (r == c) continue;
          if (m(r, c) < worst) {
            worst = m(r, c);
            where = "node " + std::to_string(i + 1) + " (" + std::to_string(r + 1) + "," +
                    std::to_string(c + 1) + ")";
          }
        }
      }
    }
    if (!std::isfinite(worst)) worst = 0.0;
    report.certificates.push_back({"pinning_metzler", worst >= -tol, worst, where, false});
  }

  append_metzler_cert(report, "observer_metzler", plant.A - ec, tol, "A-EC");
  append_nonpos_cert(report, "bbt_pi_inv_nonpos", Matrix(-bbt * pi_inv), tol, "-BB'Pi^-1");
  append_nonpos_cert(report, "ec_nonpos", Matrix(-ec), tol, "-EC");

  if (variant == Variant::theorem2) {
    Matrix ld = lap + net.pinning.as_matrix();
    Matrix stacked = kron(Matrix::Identity(n, n), plant.A) - cfg.mu * kron(ld, ec);
    append_metzler_cert(report, "stacked_observer_metzler", stacked, tol, "stacked");
    append_nonpos_cert(report, "vbbv_nonpos", Matrix(-pi_inv * bbt * pi_inv), tol, "-VBB'V");
    // Literal reading of the last theorem2 sign condition; off-diagonal blocks
    // make it unsatisfiable for any graph with edges, so it is informational.
    append_nonpos_cert(report, "kron_ec_nonpos", Matrix(-cfg.mu * kron(ld, ec)), tol,
                       "-mu(L+D)xEC", /*informational=*/true);
  }
  return report;
}

namespace {

// Feasible box for X = EC: every entry >= 0, off-diagonal entries bounded by
// the Metzler slack of A (theorem1) or A / (mu * max_i(l_ii + d_i)) (theorem2).
Matrix x_upper_bound(const PlantModel& plant, const NetworkData& net, const SynthesisConfig& cfg,
                     Variant variant) {
  const Eigen::Index m = plant.A.rows();
  Matrix ub = Matrix::Constant(m, m, std::numeric_limits<double>::infinity());
  double scale = 1.0;
  if (variant == Variant::theorem2) {
    double worst_factor = 0.0;
    for (int i = 0; i < net.graph.size(); ++i) {
      worst_factor = std::max(worst_factor, net.spectral.laplacian(i, i) + net.pinning.d[i]);
    }
    scale = cfg.mu * std::max(worst_factor, 1e-12);
  }
  // Shrink the box a hair so certificate margins survive the mu(l_ii + d_i)
  // amplification of projection round-off.
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      if (r != c) ub(r, c) = (plant.A(r, c) / scale) * (1.0 - 1e-9);
    }
  }
  return ub;
}

// Cyclic projection of E onto {E : 0 <= (EC)_kl <= ub_kl}. Exact after one
// sweep for square invertible C; a handful of sweeps otherwise.
void project_E(Matrix& e, const Matrix& c, const Matrix& ub) {
  const Eigen::Index m = e.rows();
  const Eigen::Index cols = c.cols();
  for (int sweep = 0; sweep < 128; ++sweep) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      for (Eigen::Index l = 0; l < cols; ++l) {
        Vector col = c.col(l);
        double denom = col.squaredNorm();
        if (denom <= 0.0) continue;
        double val = e.row(k).dot(col);
        double excess = 0.0;
        if (val < 0.0) {
          excess = val;
        } else if (std::isfinite(ub(k, l)) && val > ub(k, l)) {
          excess = val - ub(k, l);
        }
        if (excess != 0.0) {
          e.row(k) -= (excess / denom) * col.transpose();
          worst = std::max(worst, std::abs(excess));
        }
      }
    }
    if (worst <= 1e-15) break;
  }
}

}  // namespace

EStepResult minimize_alpha_over_E(const Matrix& pi, const PlantModel& plant,
                                  const NetworkData& net, const SynthesisConfig& cfg,
                                  Variant variant, const Matrix& e_start, const Matrix& sigma,
                                  const std::optional<Matrix>& mask) {
  validate_plant(plant);
  validate_config(cfg);
  const Eigen::Index m = plant.A.rows();
  const Eigen::Index q = plant.C.rows();
  if (e_start.rows() != m || e_start.cols() != q) {
    throw DimensionError("minimize_alpha_over_E: E_start must be m x q");
  }

  const Vector gamma = gamma_coefficients(cfg, plant, net, variant);
  const Matrix ub = x_upper_bound(plant, net, cfg, variant);

  Matrix e = e_start;
  if (!mask) project_E(e, plant.C, ub);

  EStepResult result;
  result.E = e;
  AlphaEval eval = evaluate_alpha(e, pi, plant, net, cfg, sigma, variant, gamma);
  result.alpha = eval.alpha;
  result.feasible = true;
  result.best_history.push_back(result.alpha);

  const double step_scale = cfg.e_step * std::max(1.0, e.norm());
  Matrix iterate = e;
  for (int k = 0; k < cfg.e_iterations; ++k) {
    // Subgradient of the top eigenvalue of the argmax block with respect to E.
    Vector v1 = eval.top_vector.head(m);
    Vector v2 = eval.top_vector.tail(m);
    double weight = 2.0;
    if (variant == Variant::theorem2) {
      weight *= cfg.mu * (net.pinning.d[eval.argmax_node] ? 1.0 : 0.0);
    }
    Matrix grad = weight * (v1 - v2) * (plant.C * pi * v2).transpose();
    if (mask) grad = grad.cwiseProduct(*mask);
    double norm = grad.norm();
    if (norm <= 1e-14) break;  // flat direction; nothing left to improve

    iterate -= (step_scale / (norm * std::sqrt(k + 1.0))) * grad;
    if (!mask) project_E(iterate, plant.C, ub);

    eval = evaluate_alpha(iterate, pi, plant, net, cfg, sigma, variant, gamma);
    if (eval.alpha < result.alpha) {
      result.alpha = eval.alpha;
      result.E = iterate;
    }
    result.best_history.push_back(result.alpha);
  }
  return result;
}

namespace {

bool pi_feasible(const Matrix& e, const Matrix& pi, const PlantModel& plant,
                 const NetworkData& net, const SynthesisConfig& cfg, Variant variant) {
  if (!is_positive_definite(pi, 0.0)) return false;
  // Gate tighter than the final certificate tolerance so accepted iterates
  // keep a margin against it.
  return positivity_check(e, pi, plant, net, cfg, variant, 1e-12).all_pass();
}

}  // namespace

PiStepResult minimize_alpha_over_Pi(const Matrix& e, const PlantModel& plant,
                                    const NetworkData& net, const SynthesisConfig& cfg,
                                    Variant variant, const Matrix& sigma) {
  validate_plant(plant);
  validate_config(cfg);
  const Eigen::Index m = plant.A.rows();
  const Vector gamma = gamma_coefficients(cfg, plant, net, variant);
  const Matrix eye = Matrix::Identity(m, m);

  auto alpha_of = [&](const Matrix& pi) {
    return evaluate_alpha(e, pi, plant, net, cfg, sigma, variant, gamma).alpha;
  };

  PiStepResult result;
  result.alpha = std::numeric_limits<double>::infinity();

  // Scaled-identity line search on a geometric grid, then golden-section
  // refinement of the bracket around the best feasible sample.
  const double ratio = cfg.pi_max / cfg.pi_min;
  int best_idx = -1;
  std::vector<double> grid(cfg.pi_grid);
  for (int k = 0; k < cfg.pi_grid; ++k) {
    grid[k] = cfg.pi_min * std::pow(ratio, static_cast<double>(k) / (cfg.pi_grid - 1));
    Matrix pi = grid[k] * eye;
    if (!pi_feasible(e, pi, plant, net, cfg, variant)) continue;
    double a = alpha_of(pi);
    if (a < result.alpha) {
      result.alpha = a;
      result.Pi = pi;
      result.feasible = true;
      best_idx = k;
    }
  }
  if (!result.feasible) return result;

  double lo = grid[std::max(0, best_idx - 1)];
  double hi = grid[std::min(cfg.pi_grid - 1, best_idx + 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  auto gated = [&](double s) {
    Matrix pi = s * eye;
    if (!pi_feasible(e, pi, plant, net, cfg, variant)) return std::numeric_limits<double>::infinity();
    return alpha_of(pi);
  };
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = gated(x1), f2 = gated(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-8 * hi; ++it) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = gated(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = gated(x2);
    }
  }
  for (double s : {x1, x2}) {
    Matrix pi = s * eye;
    if (!pi_feasible(e, pi, plant, net, cfg, variant)) continue;
    double a = alpha_of(pi);
    if (a < result.alpha) {
      result.alpha = a;
      result.Pi = pi;
    }
  }

  if (cfg.pi_family == PiFamily::diagonal) {
    // Cyclic per-axis refinement starting from the best scaled identity.
    Matrix pi = result.Pi;
    for (int cycle = 0; cycle < 3; ++cycle) {
      for (Eigen::Index d = 0; d < m; ++d) {
        double center = pi(d, d);
        double best_val = result.alpha;
        double best_entry = center;
        for (int k = 0; k <= 16; ++k) {
          double factor = std::pow(4.0, -1.0 + 2.0 * k / 16.0);  // 0.25x .. 4x
          Matrix trial = pi;
          trial(d, d) = center * factor;
          if (!pi_feasible(e, trial, plant, net, cfg, variant)) continue;
          double a = alpha_of(trial);
          if (a < best_val) {
            best_val = a;
            best_entry = trial(d, d);
          }
        }
        pi(d, d) = best_entry;
        result.alpha = best_val;
      }
    }
    result.Pi = pi;
  }
  return result;
}

Matrix feedback_gain(const Matrix& pi, double eta, const Matrix& b) {
  if (pi.rows() != pi.cols() || b.rows() != pi.rows()) {
    throw DimensionError("feedback_gain: Pi must be m x m and B m x p");
  }
  return -eta * b.transpose() * pi;
}

GainSet run_algorithm(const PlantModel& plant, const NetworkData& net,
                      const SynthesisConfig& cfg, Variant variant) {
  validate_plant(plant);
  validate_config(cfg);
  if (net.graph.size() < 1) throw InvariantError("run_algorithm: empty network");

  GainSet gains;
  gains.variant = variant;
  gains.seed = cfg.seed;

  ObserverInitReport init_report;
  Matrix e0 = observer_init(plant, cfg.candidate_Es, &init_report);
  gains.sweep_margin = init_report.sweep_margin;

  gains.P = solve_observer_riccati(plant.A, e0, plant.C, plant.kappa(), cfg.delta);
  gains.Sigma = compute_sigma(plant, e0, gains.P);

  Matrix pi = cfg.initial_pi * Matrix::Identity(plant.states(), plant.states());
  Matrix e = e0;
  double alpha = std::numeric_limits<double>::infinity();
  bool done = false;

  for (int outer = 0; outer < cfg.max_outer && !done; ++outer) {
    gains.outer_iterations = outer + 1;

    EStepResult e_step = minimize_alpha_over_E(pi, plant, net, cfg, variant, e, gains.Sigma);
    e = e_step.E;
    alpha = e_step.alpha;
    if (alpha <= 0.0 && positivity_check(e, pi, plant, net, cfg, variant).all_pass()) {
      done = true;
      break;
    }

    PiStepResult pi_step = minimize_alpha_over_Pi(e, plant, net, cfg, variant, gains.Sigma);
    if (pi_step.feasible) {
      pi = pi_step.Pi;
      alpha = pi_step.alpha;
    }
    if (alpha <= 0.0 && positivity_check(e, pi, plant, net, cfg, variant).all_pass()) {
      done = true;
      break;
    }
  }

  gains.E = e;
  gains.Pi = pi;
  gains.alpha = lmi_alpha(e, pi, plant, net, cfg, gains.Sigma, variant);
  gains.gamma = gamma_coefficients(cfg, plant, net, variant);
  gains.K = feedback_gain(pi, cfg.eta, plant.B);
  gains.certificates = positivity_check(e, pi, plant, net, cfg, variant);

  if (!done) {
    std::ostringstream msg;
    msg << "run_algorithm(" << variant_name(variant) << "): loop cap reached with alpha = "
        << gains.alpha;
    for (const auto& cert : gains.certificates.certificates) {
      if (!cert.pass && !cert.informational) {
        msg << "\n  failing certificate: " << cert.name << " worst=" << cert.worst;
      }
    }
    throw InfeasibleError(msg.str());
  }
  return gains;
}

}  // namespace pcons
