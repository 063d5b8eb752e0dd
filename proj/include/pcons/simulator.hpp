#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcons/gain_synthesis.hpp"
#include "pcons/graph_topology.hpp"
#include "pcons/nonlinearity.hpp"

namespace pcons {

enum class Protocol { full_observer, distributed_observer };

std::string protocol_name(Protocol p);

struct SimulationSettings {
  double T = 20.0;
  double h = 1e-3;
  std::uint64_t seed = 0;
  bool clamp = false;
  double positivity_tol = 1e-8;
  Vector s0;
  std::vector<Vector> x0;
  std::vector<Vector> xhat0;
};

/// Fully resolved simulation input: one plant replicated over the follower
/// graph, concrete gains, and nonnegative initial states.
struct Scenario {
  PlantModel plant;
  DirectedGraph graph;
  PinningSet pinning;
  SectorNonlinearity sector;
  AgentNonlinearity agent_nl;
  Protocol protocol = Protocol::full_observer;
  SynthesisConfig constants;  // eta, phi, mu (delta/s_bar unused while simulating)
  GainSet gains;              // E and K are required; the rest is carried along
  SimulationSettings sim;
};

void validate_scenario(const Scenario& scenario);

struct PositivityEvent {
  double time = 0.0;
  char series = 'x';  // 's' leader, 'x' state, 'e' estimate
  int agent = 0;      // 1-based; 0 for the leader
  int component = 0;  // 1-based
  double value = 0.0;
  bool g_induced = false;  // the drift nonlinearity pushed this component down
  bool clamped = false;
};

struct Trajectory {
  std::vector<double> times;
  Matrix s;                    // m x samples
  std::vector<Matrix> x;       // per agent, m x samples
  std::vector<Matrix> xhat;    // per agent, m x samples
  std::vector<Matrix> u;       // per agent, p x samples
  std::vector<Matrix> sec_u;   // per agent, p x samples
  std::vector<PositivityEvent> positivity_log;  // capped; totals below
  std::size_t positivity_total = 0;
  double positivity_worst = 0.0;  // most negative component seen

  int samples() const { return static_cast<int>(times.size()); }
};

Vector pinning_control(int i, const std::vector<Vector>& xhat, const Vector& s, const Matrix& k,
                       double phi, const std::vector<int>& d, const Matrix& adjacency);

Vector leader_rhs(const Vector& s, double t, const PlantModel& plant,
                  const AgentNonlinearity& g);

Vector plant_rhs(const Vector& x, const Vector& u, double t, const PlantModel& plant,
                 const AgentNonlinearity& g, const SectorNonlinearity& sec);

Vector observer_full_rhs(const Vector& xhat, const Vector& y, const Vector& u, double t,
                         const PlantModel& plant, const AgentNonlinearity& g,
                         const SectorNonlinearity& sec, const Matrix& e);

/// Distributed pinning observer: innovation on the pinned output error plus
/// ungated neighbour relative-output differences, realized agent-wise from
/// the stacked coupling I_N x A - mu (L + D) x EC.
Vector observer_distributed_rhs(int i, const std::vector<Vector>& xhat,
                                const std::vector<Vector>& x, const Vector& u, double t,
                                const PlantModel& plant, const AgentNonlinearity& g,
                                const SectorNonlinearity& sec, const Matrix& e, double mu,
                                const std::vector<int>& d, const Matrix& adjacency);

/// Classical fixed-step RK4 on the stacked (s, x_i, xhat_i) state. Controls
/// are recomputed at every stage. Throws IntegrationError on blow-up.
Trajectory simulate(const Scenario& scenario);

struct ResidualReport {
  double max_residual = 0.0;
  double at_time = 0.0;
  int agent = 0;  // 1-based
};

/// Verifies, at every stored sample, that the plant/observer right-hand-side
/// difference equals the closed-form estimation-error dynamics.
ResidualReport error_dynamics_residual(const Trajectory& traj, const Scenario& scenario);

struct MetricsSeries {
  std::vector<double> t;
  std::vector<double> est_err;       // max_i ||x_i - xhat_i||
  std::vector<double> leader_err;    // max_i ||x_i - s||
  std::vector<double> pairwise_err;  // max_{i,j} ||x_i - x_j||
  std::size_t violation_count = 0;
  double worst_violation = 0.0;
};

MetricsSeries metrics(const Trajectory& traj);

}  // namespace pcons
