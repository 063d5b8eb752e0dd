#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcons/graph_topology.hpp"
#include "pcons/matrix_analysis.hpp"

namespace pcons {

/// Which theorem/algorithm pair a quantity belongs to.
enum class Variant { theorem1, theorem2 };

std::string variant_name(Variant v);

/// Agent model shared by the whole network: dx = A x + H g(t,x) + B sec(u),
/// y = C x, with Lipschitz constant beta for g and sector bounds for sec.
struct PlantModel {
  Matrix A;
  Matrix H;
  Matrix B;
  Matrix C;
  double beta = 1.0;
  double m_l = 0.0;
  double m_h = 0.0;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
  double kappa() const;              // beta * ||H||
  double m_bar() const { return m_h + m_l; }
};

void validate_plant(const PlantModel& plant);

enum class PiFamily { scaled_identity, diagonal };

/// Constants and search knobs for the synthesis loops.
struct SynthesisConfig {
  double eta = 0.6;
  double phi = 10.0;
  double mu = 15.0;
  double delta = 0.02;
  double s_bar = 0.0;  // scalar stand-in for the trajectory factor in gamma_i

  int max_outer = 6;          // step-3..5 loop cap
  int e_iterations = 400;     // subgradient iterations per E step
  double e_step = 1.0;        // initial subgradient step scale
  double pi_min = 0.05;
  double pi_max = 20.0;
  int pi_grid = 64;
  PiFamily pi_family = PiFamily::scaled_identity;
  double initial_pi = 0.5;
  std::uint64_t seed = 0;
  std::vector<Matrix> candidate_Es;
};

void validate_config(const SynthesisConfig& cfg);

struct Certificate {
  std::string name;
  bool pass = false;
  double worst = 0.0;       // most violating margin (negative = violation)
  std::string worst_where;  // entry or block that attains it
  bool informational = false;
};

struct PositivityReport {
  std::vector<Certificate> certificates;
  bool all_pass(bool include_informational = false) const;
  const Certificate* find(const std::string& name) const;
};

/// Everything Algorithms 1-2 produce for one variant.
struct GainSet {
  Variant variant = Variant::theorem1;
  Matrix E;
  Matrix P;
  Matrix Sigma;
  Matrix Pi;
  Matrix K;
  double alpha = 0.0;
  Vector gamma;
  PositivityReport certificates;
  double sweep_margin = 0.0;  // min_sigma - beta*||H|| for the initial E
  int outer_iterations = 0;
  std::uint64_t seed = 0;
};

struct ObserverInitReport {
  int chosen_index = -1;  // index into the candidate list, -1 if from the scan
  double sweep_margin = 0.0;
  std::vector<std::string> rejected;  // one line per failed candidate
};

bool is_observable(const Matrix& a, const Matrix& c);

/// Algorithm step 1: first candidate E for which A - EC is stable, Metzler
/// and clears the sweep bound beta*||H||. Falls back to a scan of
/// E = (A + s I) C^-1 for square invertible C when the list is exhausted.
Matrix observer_init(const PlantModel& plant, const std::vector<Matrix>& candidates,
                     ObserverInitReport* report = nullptr);

/// Sigma := (A-EC)^T P + P(A-EC) + (beta ||H||)^2 P P + I. Equals -delta I
/// when P solves the observer Riccati equation exactly.
Matrix compute_sigma(const PlantModel& plant, const Matrix& e, const Matrix& p);

/// gamma_i = phi (d_i s_bar + 1) a(L-D) (m_h+m_l) eta
///           - lambda_i(Gamma L L^T Gamma)/f_i - eta^2 (m_h-m_l)^2 / (4 f_i).
double gamma_from_parts(const SynthesisConfig& cfg, const PlantModel& plant,
                        double connectivity_ld, double lambda_i, double f_i, int d_i);

Vector gamma_coefficients(const SynthesisConfig& cfg, const PlantModel& plant,
                          const NetworkData& net, Variant variant);

/// One 2m x 2m symmetric block of the quadratic matrix inequality. For
/// theorem2 the observer coupling enters as mu * d_i * EC.
Matrix assemble_lmi(int node, const Matrix& e, const Matrix& pi, const PlantModel& plant,
                    double gamma_i, double f_i, int d_i, const Matrix& sigma,
                    const SynthesisConfig& cfg, Variant variant);

/// alpha = max over nodes of the top eigenvalue of the assembled blocks.
double lmi_alpha(const Matrix& e, const Matrix& pi, const PlantModel& plant,
                 const NetworkData& net, const SynthesisConfig& cfg, const Matrix& sigma,
                 Variant variant);

/// Sign-structure side conditions of the theorems. Certificate names are
/// stable strings the CLI report and the tests grep for.
PositivityReport positivity_check(const Matrix& e, const Matrix& pi, const PlantModel& plant,
                                  const NetworkData& net, const SynthesisConfig& cfg,
                                  Variant variant, double tol = 1e-9);

struct EStepResult {
  Matrix E;
  double alpha = 0.0;
  bool feasible = false;              // some iterate satisfied the sign conditions
  std::vector<double> best_history;   // best alpha after each accepted iterate
};

/// Minimizes alpha over E with Pi fixed by projected subgradient descent on
/// the top-eigenvalue objective. The projection clips X = EC onto the box the
/// Metzler/sign conditions induce; requires square invertible C. The optional
/// mask (same shape as X, zero = frozen) restricts which entries move.
EStepResult minimize_alpha_over_E(const Matrix& pi, const PlantModel& plant,
                                  const NetworkData& net, const SynthesisConfig& cfg,
                                  Variant variant, const Matrix& e_start, const Matrix& sigma,
                                  const std::optional<Matrix>& mask = std::nullopt);

struct PiStepResult {
  Matrix Pi;
  double alpha = 0.0;
  bool feasible = false;
};

/// Minimizes alpha over the configured Pi family (scaled identity via
/// golden-section line search, or per-axis diagonal via cyclic coordinate
/// search), gated on the Pi-dependent sign conditions.
PiStepResult minimize_alpha_over_Pi(const Matrix& e, const PlantModel& plant,
                                    const NetworkData& net, const SynthesisConfig& cfg,
                                    Variant variant, const Matrix& sigma);

/// K = -eta B^T Pi.
Matrix feedback_gain(const Matrix& pi, double eta, const Matrix& b);

/// Full Algorithm 1/2 loop. Throws InfeasibleError (with diagnostics in the
/// message) if the loop cap is reached without alpha <= 0 and all sign
/// certificates passing.
GainSet run_algorithm(const PlantModel& plant, const NetworkData& net,
                      const SynthesisConfig& cfg, Variant variant);

}  // namespace pcons
