#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pcons/simulator.hpp"

using namespace pcons;
using fixtures::mat2;

namespace {

SectorNonlinearity ripple_sector() {
  SectorNonlinearity nl;
  nl.kind = SectorNonlinearity::Kind::sine_ripple;
  nl.m_l = 0.9;
  nl.m_h = 1.2;
  return nl;
}

// Smooth test rig: identity input map, sine drift, explicit stabilizing gains.
Scenario smooth_scenario() {
  Scenario sc;
  sc.plant = fixtures::example1_plant();
  sc.plant.beta = 0.5;
  sc.plant.m_l = 0.5;
  sc.plant.m_h = 2.0;
  sc.graph.adjacency = Matrix::Zero(3, 3);
  sc.graph.adjacency << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  sc.pinning.d = {1, 0, 0};
  sc.sector.kind = SectorNonlinearity::Kind::identity;
  sc.sector.m_l = 0.5;
  sc.sector.m_h = 2.0;
  sc.agent_nl.kind = AgentNonlinearity::Kind::bounded_sine;
  sc.agent_nl.amplitude = 0.5;
  sc.agent_nl.frequency = 1.0;
  sc.agent_nl.beta = 0.5;
  sc.protocol = Protocol::full_observer;
  sc.constants = fixtures::example1_constants();
  sc.gains.E = fixtures::example1_E0();
  sc.gains.Pi = Matrix::Identity(2, 2);
  sc.gains.K = feedback_gain(sc.gains.Pi, 0.6, sc.plant.B);
  sc.sim.T = 2.0;
  sc.sim.h = 0.01;
  Vector s0(2), a(2), b(2), c(2);
  s0 << 1.0, 0.5;
  a << 1.5, 0.3;
  b << 0.2, 1.1;
  c << 0.8, 0.9;
  sc.sim.s0 = s0;
  sc.sim.x0 = {a, b, c};
  Vector ha(2), hb(2), hc(2);
  ha << 1.0, 1.0;
  hb << 0.5, 0.5;
  hc << 0.1, 0.7;
  sc.sim.xhat0 = {ha, hb, hc};
  return sc;
}

Vector stacked_final(const Trajectory& traj) {
  const int n = static_cast<int>(traj.x.size());
  const int m = static_cast<int>(traj.s.rows());
  const int last = traj.samples() - 1;
  Vector z(m * (1 + 2 * n));
  z.segment(0, m) = traj.s.col(last);
  for (int i = 0; i < n; ++i) {
    z.segment(m * (1 + i), m) = traj.x[i].col(last);
    z.segment(m * (1 + n + i), m) = traj.xhat[i].col(last);
  }
  return z;
}

}  // namespace

TEST_CASE("sector_eval") {
  SectorNonlinearity nl = ripple_sector();
  Vector zero = Vector::Zero(1);
  CHECK(sector_eval(nl, zero)(0) == 0.0);

  Vector u(1);
  u << M_PI / 2.0;
  CHECK(sector_eval(nl, u)(0) == doctest::Approx(0.9 * M_PI / 2.0).epsilon(1e-12));

  SectorNonlinearity id;
  id.kind = SectorNonlinearity::Kind::identity;
  Vector v(3);
  v << -2.0, 0.5, 7.0;
  CHECK((sector_eval(id, v) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sector table interpolation") {
  SectorNonlinearity table;
  table.kind = SectorNonlinearity::Kind::table;
  table.m_l = 0.5;
  table.m_h = 1.0;
  table.knots_u = {-1.0, 0.0, 1.0};
  table.knots_v = {-0.75, 0.0, 0.75};
  validate_sector(table);
  CHECK(table.scalar(0.5) == doctest::Approx(0.375));
  CHECK(table.scalar(2.0) == doctest::Approx(1.5));  // edge-slope extrapolation

  table.knots_v = {-0.75, 0.1, 0.75};  // sec(0) != 0
  CHECK_THROWS_AS(validate_sector(table), InvariantError);
}

TEST_CASE("sector_bounds_check") {
  SectorNonlinearity nl = ripple_sector();
  SectorBoundsReport wide = sector_bounds_check(nl, -100.0, 100.0, 0.01);
  CHECK(wide.pass);
  CHECK(wide.points == 20001);

  SectorNonlinearity id;
  id.kind = SectorNonlinearity::Kind::identity;
  id.m_l = 0.5;
  id.m_h = 2.0;
  CHECK(sector_bounds_check(id, -10.0, 10.0, 0.1).pass);

  SectorNonlinearity tight = ripple_sector();
  tight.m_l = 1.0;  // the true lower slope 0.9 violates this claim
  SectorBoundsReport bad = sector_bounds_check(tight, -10.0, 10.0, 0.01);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_slack < 0.0);
}

TEST_CASE("sector decomposition stays inside the spread bound") {
  SectorNonlinearity nl = ripple_sector();
  const double mid = 0.5 * (nl.m_h + nl.m_l);
  const double half_spread = 0.5 * (nl.m_h - nl.m_l);
  for (double u = -100.0; u <= 100.0; u += 0.01) {
    double xi = nl.scalar(u) - mid * u;
    CHECK(xi * xi <= half_spread * half_spread * u * u + 1e-12);
  }
}

TEST_CASE("pinning_control") {
  Matrix k(1, 2);
  k << -0.441, -0.441;
  Matrix adjacency = Matrix::Zero(3, 3);
  adjacency << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  std::vector<int> d{1, 0, 0};
  Vector s(2);
  s << 1.0, 2.0;

  // zero disagreement and xhat_i = s: no control action
  std::vector<Vector> agree(3, s);
  CHECK(pinning_control(0, agree, s, k, 10.0, d, adjacency).cwiseAbs().maxCoeff() == 0.0);

  // unpinned node with no in-edges ignores everyone
  Matrix none = Matrix::Zero(3, 3);
  std::vector<Vector> spread;
  Vector v1(2), v2(2), v3(2);
  v1 << 5.0, -1.0;
  v2 << 0.0, 0.0;
  v3 << 2.0, 2.0;
  spread = {v1, v2, v3};
  CHECK(pinning_control(1, spread, s, k, 10.0, std::vector<int>{1, 0, 0}, none)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // hand expansion of the double sum on the 3-cycle
  for (int i = 0; i < 3; ++i) {
    Vector acc = Vector::Zero(2);
    for (int j = 0; j < 3; ++j) acc += adjacency(i, j) * (spread[i] - spread[j]);
    Vector expected = 10.0 * (k * acc);
    if (d[i]) expected += 10.0 * (k * (spread[i] - s));
    Vector got = pinning_control(i, spread, s, k, 10.0, d, adjacency);
    CHECK((got - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pinning_control reduces to pure leader tracking without edges") {
  Matrix k(1, 2);
  k << -0.3, -0.2;
  Matrix none = Matrix::Zero(2, 2);
  Vector s(2), xh0(2), xh1(2);
  s << 0.4, 0.6;
  xh0 << 1.0, 2.0;
  xh1 << 3.0, 1.0;
  std::vector<Vector> xhat{xh0, xh1};
  std::vector<int> d{1, 0};
  Vector u0 = pinning_control(0, xhat, s, k, 7.0, d, none);
  Vector expected = 7.0 * (k * (xh0 - s));
  CHECK((u0 - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pinning_control(1, xhat, s, k, 7.0, d, none).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("right-hand sides match direct formula evaluation") {
  PlantModel plant = fixtures::example1_plant();
  SectorNonlinearity sec = ripple_sector();
  AgentNonlinearity g;
  g.kind = AgentNonlinearity::Kind::state_trig;

  Vector x(2), u(1);
  x << 0.7, 1.9;
  u << 0.45;
  const double t = 2.3;

  Vector gx(2);
  gx << x(0) * std::sin(0.31 * x(0) * t), x(1) * std::cos(0.31 * x(1) * t);
  Vector expected_plant = plant.A * x + plant.H * gx + plant.B * sector_eval(sec, u);
  CHECK((plant_rhs(x, u, t, plant, g, sec) - expected_plant).cwiseAbs().maxCoeff() <= 1e-15);

  // leader: same drift without the input term
  CHECK((leader_rhs(x, t, plant, g) - (plant.A * x + plant.H * gx)).cwiseAbs().maxCoeff() <= 1e-15);

  AgentNonlinearity zero;
  CHECK((leader_rhs(x, t, plant, zero) - plant.A * x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((leader_rhs(Vector::Zero(2), t, plant, zero)).cwiseAbs().maxCoeff() == 0.0);

  // full observer with exact estimate reduces to the plant field
  Vector y = plant.C * x;
  Matrix e = fixtures::example1_E0();
  CHECK((observer_full_rhs(x, y, u, t, plant, g, sec, e) - expected_plant).cwiseAbs().maxCoeff() <=
        1e-15);

  // and with E = 0 it is an open-loop copy
  Vector xhat(2);
  xhat << 1.1, 0.2;
  Vector ghat(2);
  ghat << xhat(0) * std::sin(0.31 * xhat(0) * t), xhat(1) * std::cos(0.31 * xhat(1) * t);
  Vector open_loop = plant.A * xhat + plant.H * ghat + plant.B * sector_eval(sec, u);
  CHECK((observer_full_rhs(xhat, y, u, t, plant, g, sec, Matrix::Zero(2, 2)) - open_loop)
            .cwiseAbs()
            .maxCoeff() <= 1e-15);
}

TEST_CASE("distributed observer agrees with the stacked coupling form") {
  PlantModel plant = fixtures::example1_plant();
  SectorNonlinearity sec = ripple_sector();
  AgentNonlinearity g;
  g.kind = AgentNonlinearity::Kind::state_trig;
  const int n = 3;
  Matrix adjacency(3, 3);
  adjacency << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  std::vector<int> d{1, 0, 0};
  const double mu = 15.0;
  Matrix e = fixtures::example1_Eopt_alg2();
  Matrix ec = e * plant.C;

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  std::vector<Vector> x(n), xhat(n);
  for (int i = 0; i < n; ++i) {
    Vector a(2), b(2);
    a << dist(rng), dist(rng);
    b << dist(rng), dist(rng);
    x[i] = a;
    xhat[i] = b;
  }
  Vector u(1);
  u << 0.3;
  const double t = 1.7;

  // stacked operator built independently: I_N x A - mu (L + D) x EC
  Matrix lap = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) lap(i, j) = -adjacency(i, j);
    }
    lap(i, i) = adjacency.row(i).sum();
  }
  Matrix ld = lap;
  for (int i = 0; i < n; ++i) ld(i, i) += d[i];
  Matrix coupling = Matrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      coupling.block(2 * i, 2 * j, 2, 2) =
          (i == j ? plant.A : Matrix::Zero(2, 2)) - mu * ld(i, j) * ec;
    }
  }
  Vector xs(2 * n), xh(2 * n);
  for (int i = 0; i < n; ++i) {
    xs.segment(2 * i, 2) = x[i];
    xh.segment(2 * i, 2) = xhat[i];
  }
  // the x part enters with +mu (L + D) x EC
  Matrix x_coupling = Matrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      x_coupling.block(2 * i, 2 * j, 2, 2) = mu * ld(i, j) * ec;
    }
  }
  Vector stacked = coupling * xh + x_coupling * xs;

  for (int i = 0; i < n; ++i) {
    Vector rhs = observer_distributed_rhs(i, xhat, x, u, t, plant, g, sec, e, mu, d, adjacency);
    Vector nonlinear = plant.H * g.eval(t, xhat[i]) + plant.B * sector_eval(sec, u);
    CHECK((rhs - nonlinear - stacked.segment(2 * i, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("simulate holds the zero equilibrium") {
  Scenario sc = smooth_scenario();
  sc.agent_nl.kind = AgentNonlinearity::Kind::zero;
  sc.sim.s0 = Vector::Zero(2);
  sc.sim.x0 = {Vector::Zero(2), Vector::Zero(2), Vector::Zero(2)};
  sc.sim.xhat0 = {Vector::Zero(2), Vector::Zero(2), Vector::Zero(2)};
  Trajectory traj = simulate(sc);
  CHECK(traj.s.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& xi : traj.x) CHECK(xi.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& ui : traj.u) CHECK(ui.cwiseAbs().maxCoeff() == 0.0);
  CHECK(traj.positivity_total == 0);
}

TEST_CASE("RK4 step-halving error ratio sits near 16") {
  Scenario sc = smooth_scenario();
  Trajectory coarse = simulate(sc);
  Scenario half = sc;
  half.sim.h = sc.sim.h / 2.0;
  Trajectory mid = simulate(half);
  Scenario quarter = sc;
  quarter.sim.h = sc.sim.h / 4.0;
  Trajectory fine = simulate(quarter);

  double err_h = (stacked_final(coarse) - stacked_final(mid)).norm();
  double err_h2 = (stacked_final(mid) - stacked_final(fine)).norm();
  REQUIRE(err_h2 > 0.0);
  double ratio = err_h / err_h2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("positive linear baseline stays nonnegative") {
  Scenario sc = smooth_scenario();
  sc.agent_nl.kind = AgentNonlinearity::Kind::zero;
  sc.gains.K = Matrix::Zero(1, 2);  // no input
  sc.sim.T = 2.0;
  sc.sim.h = 1e-3;
  std::mt19937_64 rng(77);
  auto draw = [&rng] { return 2.0 * ((rng() >> 11) * 0x1.0p-53); };
  auto vec2 = [&] {
    Vector v(2);
    v << draw(), draw();
    return v;
  };
  sc.sim.s0 = vec2();
  sc.sim.x0 = {vec2(), vec2(), vec2()};
  sc.sim.xhat0 = {vec2(), vec2(), vec2()};

  Trajectory traj = simulate(sc);
  const double floor = -10.0 * std::pow(sc.sim.h, 4);
  CHECK(traj.s.minCoeff() >= floor);
  for (const auto& xi : traj.x) CHECK(xi.minCoeff() >= floor);
  CHECK(traj.positivity_total == 0);
}

TEST_CASE("simulate reports blow-up with the last valid time") {
  Scenario sc = smooth_scenario();
  sc.gains.K = -10.0 * sc.gains.K;  // flipped, amplified: positive feedback
  sc.sim.T = 20.0;
  sc.sim.h = 1e-3;
  try {
    simulate(sc);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& err) {
    CHECK(err.last_valid_time() >= 0.0);
    CHECK(err.last_valid_time() < 20.0);
  }
}

TEST_CASE("simulate rejects negative initial states") {
  Scenario sc = smooth_scenario();
  sc.sim.x0[1](0) = -0.1;
  CHECK_THROWS_AS(simulate(sc), InvariantError);
}

TEST_CASE("clamped runs log their interventions") {
  Scenario sc = smooth_scenario();
  // bounded_sine drift with a negative-leaning H column can push states down;
  // force it with a start on the boundary
  sc.sim.clamp = true;
  sc.sim.x0[0] = Vector::Zero(2);
  Trajectory traj = simulate(sc);
  for (const auto& event : traj.positivity_log) {
    CHECK(event.clamped);
  }
  double floor = 0.0;
  for (const auto& xi : traj.x) floor = std::min(floor, xi.minCoeff());
  CHECK(floor >= -sc.sim.positivity_tol);
}

TEST_CASE("error dynamics residual vanishes for both protocols") {
  Scenario sc = smooth_scenario();
  sc.sector = ripple_sector();
  sc.plant.m_l = 0.9;
  sc.plant.m_h = 1.2;
  sc.agent_nl.kind = AgentNonlinearity::Kind::state_trig;
  sc.agent_nl.beta = 1.0;
  sc.plant.beta = 1.0;

  Trajectory traj = simulate(sc);
  ResidualReport full = error_dynamics_residual(traj, sc);
  CHECK(full.max_residual <= 1e-9);

  Scenario dist = sc;
  dist.protocol = Protocol::distributed_observer;
  dist.gains.E = fixtures::example1_Eopt_alg2();
  Trajectory traj2 = simulate(dist);
  ResidualReport distributed = error_dynamics_residual(traj2, dist);
  CHECK(distributed.max_residual <= 1e-9);
}

TEST_CASE("error dynamics residual detects a perturbed oracle") {
  Scenario sc = smooth_scenario();
  Trajectory traj = simulate(sc);

  // hand-built expected value with E perturbed by 1e-3 in one entry
  Matrix e_perturbed = sc.gains.E;
  e_perturbed(0, 0) += 1e-3;
  Matrix ec = e_perturbed * sc.plant.C;
  double worst = 0.0;
  for (int idx = 0; idx < traj.samples(); idx += 10) {
    double t = traj.times[idx];
    for (int i = 0; i < 3; ++i) {
      Vector x = traj.x[i].col(idx);
      Vector xhat = traj.xhat[i].col(idx);
      Vector u = traj.u[i].col(idx);
      Vector implemented =
          plant_rhs(x, u, t, sc.plant, sc.agent_nl, sc.sector) -
          observer_full_rhs(xhat, sc.plant.C * x, u, t, sc.plant, sc.agent_nl, sc.sector,
                            sc.gains.E);
      Vector g_tilde = sc.agent_nl.eval(t, x) - sc.agent_nl.eval(t, xhat);
      Vector expected = (sc.plant.A - ec) * (x - xhat) + sc.plant.H * g_tilde;
      worst = std::max(worst, (implemented - expected).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst > 1e-6);  // grows with the perturbation instead of vanishing
}

TEST_CASE("metrics") {
  Trajectory traj;
  traj.times = {0.0};
  traj.s = Matrix::Zero(2, 1);
  traj.s << 1.0, 1.0;
  Matrix x1(2, 1), x2(2, 1);
  x1 << 1.5, 1.0;  // +0.5 from the leader
  x2 << 0.5, 1.0;  // -0.5 from the leader
  traj.x = {x1, x2};
  traj.xhat = {x1, x2};  // exact estimates
  traj.u = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  traj.sec_u = traj.u;

  MetricsSeries series = metrics(traj);
  CHECK(series.est_err[0] == 0.0);
  CHECK(series.leader_err[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(series.pairwise_err[0] == doctest::Approx(1.0).epsilon(1e-12));
}
