#include "pcons/simulator.hpp"

#include <cmath>
#include <limits>

namespace pcons {

std::string protocol_name(Protocol p) {
  return p == Protocol::full_observer ? "full_observer" : "distributed_observer";
}

void validate_scenario(const Scenario& sc) {
  validate_plant(sc.plant);
  validate_graph(sc.graph);
  validate_sector(sc.sector);
  const int n = sc.graph.size();
  const int m = sc.plant.states();
  if (sc.pinning.size() != n) throw DimensionError("scenario: pinning/graph size mismatch");
  if (sc.gains.E.rows() != m || sc.gains.E.cols() != sc.plant.outputs()) {
    throw DimensionError("scenario: E must be m x q");
  }
  if (sc.gains.K.rows() != sc.plant.inputs() || sc.gains.K.cols() != m) {
    throw DimensionError("scenario: K must be p x m");
  }
  if (sc.sim.h <= 0.0 || sc.sim.T < sc.sim.h) throw InvariantError("scenario: need h > 0 and T >= h");
  if (sc.sim.s0.size() != m) throw DimensionError("scenario: s0 must have m components");
  if (static_cast<int>(sc.sim.x0.size()) != n || static_cast<int>(sc.sim.xhat0.size()) != n) {
    throw DimensionError("scenario: need initial x and xhat for every agent");
  }
  auto check_nonneg = [](const Vector& v, const char* what) {
    if ((v.array() < 0.0).any()) {
      throw InvariantError(std::string("scenario: ") + what + " must be elementwise nonnegative");
    }
  };
  check_nonneg(sc.sim.s0, "s(0)");
  for (int i = 0; i < n; ++i) {
    if (sc.sim.x0[i].size() != m || sc.sim.xhat0[i].size() != m) {
      throw DimensionError("scenario: initial state dimension mismatch");
    }
    check_nonneg(sc.sim.x0[i], "x(0)");
    check_nonneg(sc.sim.xhat0[i], "xhat(0)");
  }
}

Vector pinning_control(int i, const std::vector<Vector>& xhat, const Vector& s, const Matrix& k,
                       double phi, const std::vector<int>& d, const Matrix& adjacency) {
  const Eigen::Index m = s.size();
  if (k.cols() != m) throw DimensionError("pinning_control: K column count must match state size");
  Vector disagreement = Vector::Zero(m);
  for (std::size_t j = 0; j < xhat.size(); ++j) {
    double a_ij = adjacency(i, static_cast<Eigen::Index>(j));
    if (a_ij != 0.0) disagreement += a_ij * (xhat[i] - xhat[j]);
  }
  Vector u = phi * (k * disagreement);
  // The pinning term carries the same sign as the neighbour term so that the
  // stacked tracking operator is (L + D); with K = -eta B' Pi both terms are
  // then corrective.
  if (d[i]) u += phi * (k * (xhat[i] - s));
  return u;
}

Vector leader_rhs(const Vector& s, double t, const PlantModel& plant,
                  const AgentNonlinearity& g) {
  return plant.A * s + plant.H * g.eval(t, s);
}

Vector plant_rhs(const Vector& x, const Vector& u, double t, const PlantModel& plant,
                 const AgentNonlinearity& g, const SectorNonlinearity& sec) {
  return plant.A * x + plant.H * g.eval(t, x) + plant.B * sector_eval(sec, u);
}

Vector observer_full_rhs(const Vector& xhat, const Vector& y, const Vector& u, double t,
                         const PlantModel& plant, const AgentNonlinearity& g,
                         const SectorNonlinearity& sec, const Matrix& e) {
  return plant.A * xhat + plant.H * g.eval(t, xhat) + plant.B * sector_eval(sec, u) +
         e * (y - plant.C * xhat);
}

Vector observer_distributed_rhs(int i, const std::vector<Vector>& xhat,
                                const std::vector<Vector>& x, const Vector& u, double t,
                                const PlantModel& plant, const AgentNonlinearity& g,
                                const SectorNonlinearity& sec, const Matrix& e, double mu,
                                const std::vector<int>& d, const Matrix& adjacency) {
  Vector rhs = plant.A * xhat[i] + plant.H * g.eval(t, xhat[i]) + plant.B * sector_eval(sec, u);
  Matrix ec = e * plant.C;
  if (d[i]) rhs += mu * (ec * (x[i] - xhat[i]));
  for (std::size_t j = 0; j < xhat.size(); ++j) {
    double a_ij = adjacency(i, static_cast<Eigen::Index>(j));
    if (a_ij != 0.0) {
      rhs += mu * a_ij * (ec * ((x[i] - x[j]) - (xhat[i] - xhat[j])));
    }
  }
  return rhs;
}

namespace {

struct Stacked {
  // Flat layout: [s, x_1..x_n, xhat_1..xhat_n], each block of size m.
  int n, m;
  int size() const { return m * (1 + 2 * n); }
  Vector s(const Vector& z) const { return z.segment(0, m); }
  Vector x(const Vector& z, int i) const { return z.segment(m * (1 + i), m); }
  Vector xhat(const Vector& z, int i) const { return z.segment(m * (1 + n + i), m); }
};

Vector derivative(const Scenario& sc, const Stacked& lay, double t, const Vector& z,
                  std::vector<Vector>* controls_out) {
  const int n = lay.n;
  const int m = lay.m;
  Vector s = lay.s(z);
  std::vector<Vector> x(n), xhat(n);
  for (int i = 0; i < n; ++i) {
    x[i] = lay.x(z, i);
    xhat[i] = lay.xhat(z, i);
  }

  Vector dz(lay.size());
  dz.segment(0, m) = leader_rhs(s, t, sc.plant, sc.agent_nl);

  for (int i = 0; i < n; ++i) {
    Vector u = pinning_control(i, xhat, s, sc.gains.K, sc.constants.phi, sc.pinning.d,
                               sc.graph.adjacency);
    if (controls_out) (*controls_out)[i] = u;
    dz.segment(m * (1 + i), m) = plant_rhs(x[i], u, t, sc.plant, sc.agent_nl, sc.sector);
    if (sc.protocol == Protocol::full_observer) {
      Vector y = sc.plant.C * x[i];
      dz.segment(m * (1 + n + i), m) =
          observer_full_rhs(xhat[i], y, u, t, sc.plant, sc.agent_nl, sc.sector, sc.gains.E);
    } else {
      dz.segment(m * (1 + n + i), m) =
          observer_distributed_rhs(i, xhat, x, u, t, sc.plant, sc.agent_nl, sc.sector,
                                   sc.gains.E, sc.constants.mu, sc.pinning.d, sc.graph.adjacency);
    }
  }
  return dz;
}

constexpr std::size_t kMaxLoggedEvents = 1u << 16;

void record_violation(Trajectory& traj, double time, char series, int agent, int component,
                      double value, bool g_induced, bool clamped) {
  ++traj.positivity_total;
  if (value < traj.positivity_worst) traj.positivity_worst = value;
  if (traj.positivity_log.size() < kMaxLoggedEvents) {
    traj.positivity_log.push_back({time, series, agent, component, value, g_induced, clamped});
  }
}

}  // namespace

Trajectory simulate(const Scenario& sc) {
  validate_scenario(sc);
  const int n = sc.graph.size();
  const int m = sc.plant.states();
  const int p = sc.plant.inputs();
  const Stacked lay{n, m};

  const long steps = std::lround(sc.sim.T / sc.sim.h);
  const double h = sc.sim.h;

  Trajectory traj;
  traj.times.resize(steps + 1);
  traj.s.resize(m, steps + 1);
  traj.x.assign(n, Matrix(m, steps + 1));
  traj.xhat.assign(n, Matrix(m, steps + 1));
  traj.u.assign(n, Matrix(p, steps + 1));
  traj.sec_u.assign(n, Matrix(p, steps + 1));

  Vector z(lay.size());
  z.segment(0, m) = sc.sim.s0;
  for (int i = 0; i < n; ++i) {
    z.segment(m * (1 + i), m) = sc.sim.x0[i];
    z.segment(m * (1 + n + i), m) = sc.sim.xhat0[i];
  }

  std::vector<Vector> controls(n, Vector::Zero(p));

  auto store = [&](long idx, double t) {
    traj.times[idx] = t;
    traj.s.col(idx) = lay.s(z);
    for (int i = 0; i < n; ++i) {
      traj.x[i].col(idx) = lay.x(z, i);
      traj.xhat[i].col(idx) = lay.xhat(z, i);
      traj.u[i].col(idx) = controls[i];
      traj.sec_u[i].col(idx) = sector_eval(sc.sector, controls[i]);
    }
  };

  auto monitor = [&](double t) {
    auto scan = [&](char series, int agent, const Vector& v, int offset) {
      for (int c = 0; c < m; ++c) {
        double val = v(c);
        if (val < -sc.sim.positivity_tol) {
          double drift = (sc.plant.H * sc.agent_nl.eval(t, v))(c);
          bool clamped = sc.sim.clamp;
          record_violation(traj, t, series, agent, c + 1, val, drift < 0.0, clamped);
          if (sc.sim.clamp) z(offset + c) = 0.0;
        } else if (sc.sim.clamp && val < 0.0) {
          z(offset + c) = 0.0;  // sub-threshold noise is clamped silently
        }
      }
    };
    scan('s', 0, lay.s(z), 0);
    for (int i = 0; i < n; ++i) {
      scan('x', i + 1, lay.x(z, i), m * (1 + i));
      scan('e', i + 1, lay.xhat(z, i), m * (1 + n + i));
    }
  };

  // Stage-0 derivative fills the stored controls for the sample at t.
  Vector k1 = derivative(sc, lay, 0.0, z, &controls);
  store(0, 0.0);
  monitor(0.0);

  for (long step = 0; step < steps; ++step) {
    const double t = step * h;
    Vector k2 = derivative(sc, lay, t + 0.5 * h, z + 0.5 * h * k1, nullptr);
    Vector k3 = derivative(sc, lay, t + 0.5 * h, z + 0.5 * h * k2, nullptr);
    Vector k4 = derivative(sc, lay, t + h, z + h * k3, nullptr);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t_next = (step + 1) * h;
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e150) {
      throw IntegrationError(t, "simulate: state blew up after t = " + std::to_string(t));
    }
    monitor(t_next);
    k1 = derivative(sc, lay, t_next, z, &controls);
    store(step + 1, t_next);
  }
  return traj;
}

ResidualReport error_dynamics_residual(const Trajectory& traj, const Scenario& sc) {
  const int n = sc.graph.size();
  Matrix ec = sc.gains.E * sc.plant.C;
  ResidualReport report;

  std::vector<Vector> x(n), xhat(n);
  for (int idx = 0; idx < traj.samples(); ++idx) {
    const double t = traj.times[idx];
    for (int i = 0; i < n; ++i) {
      x[i] = traj.x[i].col(idx);
      xhat[i] = traj.xhat[i].col(idx);
    }
    for (int i = 0; i < n; ++i) {
      Vector u = traj.u[i].col(idx);
      Vector implemented =
          plant_rhs(x[i], u, t, sc.plant, sc.agent_nl, sc.sector) -
          (sc.protocol == Protocol::full_observer
               ? observer_full_rhs(xhat[i], sc.plant.C * x[i], u, t, sc.plant, sc.agent_nl,
                                   sc.sector, sc.gains.E)
               : observer_distributed_rhs(i, xhat, x, u, t, sc.plant, sc.agent_nl, sc.sector,
                                          sc.gains.E, sc.constants.mu, sc.pinning.d,
                                          sc.graph.adjacency));

      Vector e_i = x[i] - xhat[i];
      Vector g_tilde = sc.agent_nl.eval(t, x[i]) - sc.agent_nl.eval(t, xhat[i]);
      Vector expected;
      if (sc.protocol == Protocol::full_observer) {
        expected = (sc.plant.A - ec) * e_i + sc.plant.H * g_tilde;
      } else {
        expected = sc.plant.A * e_i + sc.plant.H * g_tilde;
        if (sc.pinning.d[i]) expected -= sc.constants.mu * (ec * e_i);
        for (int j = 0; j < n; ++j) {
          double a_ij = sc.graph.adjacency(i, j);
          if (a_ij != 0.0) {
            expected += sc.constants.mu * a_ij * (ec * ((x[j] - xhat[j]) - e_i));
          }
        }
      }
      double r = (implemented - expected).cwiseAbs().maxCoeff();
      if (r > report.max_residual) {
        report.max_residual = r;
        report.at_time = t;
        report.agent = i + 1;
      }
    }
  }
  return report;
}

MetricsSeries metrics(const Trajectory& traj) {
  MetricsSeries series;
  const int samples = traj.samples();
  const int n = static_cast<int>(traj.x.size());
  series.t = traj.times;
  series.est_err.resize(samples);
  series.leader_err.resize(samples);
  series.pairwise_err.resize(samples);
  for (int idx = 0; idx < samples; ++idx) {
    double est = 0.0, leader = 0.0, pairwise = 0.0;
    for (int i = 0; i < n; ++i) {
      est = std::max(est, (traj.x[i].col(idx) - traj.xhat[i].col(idx)).norm());
      leader = std::max(leader, (traj.x[i].col(idx) - traj.s.col(idx)).norm());
      for (int j = i + 1; j < n; ++j) {
        pairwise = std::max(pairwise, (traj.x[i].col(idx) - traj.x[j].col(idx)).norm());
      }
    }
    series.est_err[idx] = est;
    series.leader_err[idx] = leader;
    series.pairwise_err[idx] = pairwise;
  }
  series.violation_count = traj.positivity_total;
  series.worst_violation = traj.positivity_worst;
  return series;
}

}  // namespace pcons
