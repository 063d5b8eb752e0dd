#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

#include "pcons/graph_topology.hpp"

using namespace pcons;

namespace {

DirectedGraph graph_from(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  Matrix a(n, n);
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) a(r, c++) = v;
    ++r;
  }
  return DirectedGraph{a, {}};
}

// Information flow 1 -> 2 -> 3 -> 1, row-receiver convention.
DirectedGraph three_cycle() { return graph_from({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}); }

DirectedGraph two_bidirectional() { return graph_from({{0, 1}, {1, 0}}); }

DirectedGraph random_digraph(std::mt19937& rng, int n, double density) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (r != c && dist(rng) < density) a(r, c) = 1.0;
    }
  }
  return DirectedGraph{a, {}};
}

DirectedGraph random_strongly_connected(std::mt19937& rng, int n, double density) {
  DirectedGraph g = random_digraph(rng, n, density);
  for (int i = 0; i < n; ++i) g.adjacency(i, (i + 1) % n) = 1.0;  // ring backbone
  return g;
}

int zero_eigenvalue_count(const Matrix& lap) {
  Eigen::EigenSolver<Matrix> es(lap, false);
  double scale = std::max(1.0, lap.norm());
  int zeros = 0;
  for (Eigen::Index k = 0; k < lap.rows(); ++k) {
    if (std::abs(es.eigenvalues()(k)) <= 1e-7 * scale) ++zeros;
  }
  return zeros;
}

}  // namespace

TEST_CASE("laplacian of the stock small graphs") {
  Matrix expected(3, 3);
  expected << 1, 0, -1, -1, 1, 0, 0, -1, 1;
  CHECK(laplacian(three_cycle()) == expected);

  Matrix two(2, 2);
  two << 1, -1, -1, 1;
  CHECK(laplacian(two_bidirectional()) == two);

  CHECK(laplacian(graph_from({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}})) == Matrix::Zero(3, 3));
}

TEST_CASE("graph validation") {
  DirectedGraph self_loop = graph_from({{1.0, 0}, {0, 0}});
  CHECK_THROWS_AS(validate_graph(self_loop), InvariantError);
  DirectedGraph negative = graph_from({{0, -1.0}, {0, 0}});
  CHECK_THROWS_AS(validate_graph(negative), InvariantError);
}

TEST_CASE("strong connectivity and spanning trees") {
  CHECK(is_strongly_connected(three_cycle()));
  // chain 1 -> 2 -> 3: node 2 receives from 1, node 3 from 2
  DirectedGraph chain = graph_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
  CHECK_FALSE(is_strongly_connected(chain));
  CHECK(has_spanning_tree(chain));
  CHECK(is_strongly_connected(DirectedGraph{Matrix::Zero(1, 1), {}}));

  DirectedGraph disconnected = graph_from({{0, 0}, {0, 0}});
  CHECK_FALSE(has_spanning_tree(disconnected));
  CHECK(has_spanning_tree(three_cycle()));
}

TEST_CASE("spanning tree matches the simple-zero-eigenvalue criterion") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + trial % 5;
    DirectedGraph g = random_digraph(rng, n, 0.35);
    bool tree = has_spanning_tree(g);
    bool simple_zero = zero_eigenvalue_count(laplacian(g)) == 1;
    CHECK(tree == simple_zero);
  }
}

TEST_CASE("left Perron vector") {
  Vector f3 = left_perron_vector(laplacian(three_cycle()));
  CHECK((f3 - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff() <= 1e-12);

  Vector f2 = left_perron_vector(laplacian(two_bidirectional()));
  CHECK((f2 - Vector::Constant(2, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);

  // weighted 2-cycle, a_12 = 2, a_21 = 1
  DirectedGraph weighted = graph_from({{0, 2}, {1, 0}});
  Vector fw = left_perron_vector(laplacian(weighted));
  CHECK(fw(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(fw(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  DirectedGraph chain = graph_from({{0, 0}, {1, 0}});
  CHECK_THROWS_AS(left_perron_vector(laplacian(chain)), StructureError);
}

TEST_CASE("left Perron vector annihilates L on random strongly connected digraphs") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + trial % 7;
    DirectedGraph g = random_strongly_connected(rng, n, 0.3);
    Matrix lap = laplacian(g);
    Vector f = left_perron_vector(lap);
    CHECK((f.transpose() * lap).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(f.minCoeff() > 0.0);
    CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("generalized connectivity closed forms") {
  Matrix l2 = laplacian(two_bidirectional());
  Vector f2 = Vector::Constant(2, 0.5);
  CHECK(generalized_connectivity(l2, f2) == doctest::Approx(2.0).epsilon(1e-10));

  Matrix l3 = laplacian(three_cycle());
  Vector f3 = Vector::Constant(3, 1.0 / 3.0);
  CHECK(generalized_connectivity(l3, f3) == doctest::Approx(1.5).epsilon(1e-10));

  // complete undirected triangle
  DirectedGraph k3 = graph_from({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  CHECK(generalized_connectivity(laplacian(k3), f3) == doctest::Approx(3.0).epsilon(1e-10));

  CHECK_THROWS_AS(generalized_connectivity(Matrix::Zero(1, 1), Vector::Ones(1)), ParameterError);
}

TEST_CASE("generalized connectivity brute-force oracle on the triangle") {
  DirectedGraph k3 = graph_from({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  Matrix lap = laplacian(k3);
  Vector f = Vector::Constant(3, 1.0 / 3.0);
  Matrix gamma = f.asDiagonal();
  Matrix l_hat = 0.5 * (gamma * lap + lap.transpose() * gamma);

  std::mt19937 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100000; ++k) {
    Vector x(3);
    x << gauss(rng), gauss(rng), gauss(rng);
    x -= f * (f.dot(x) / f.squaredNorm());
    double denom = x.dot(gamma * x);
    if (denom < 1e-12) continue;
    best = std::min(best, x.dot(l_hat * x) / denom);
  }
  double direct = generalized_connectivity(lap, f);
  CHECK(std::abs(best - direct) <= 1e-3);
  CHECK(best >= direct - 1e-9);  // sampled quotients never undershoot the minimum
}

TEST_CASE("generalized connectivity equals lambda_2 on undirected graphs") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + trial % 7;
    Matrix a = Matrix::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = r + 1; c < n; ++c) {
        double w = dist(rng) < 0.5 ? 1.0 : 0.0;
        a(r, c) = a(c, r) = w;
      }
    }
    for (int r = 0; r + 1 < n; ++r) a(r, r + 1) = a(r + 1, r) = 1.0;  // keep connected
    DirectedGraph g{a, {}};
    Matrix lap = laplacian(g);
    Vector f = left_perron_vector(lap);
    CHECK((f - Vector::Constant(n, 1.0 / n)).cwiseAbs().maxCoeff() <= 1e-9);

    Eigen::SelfAdjointEigenSolver<Matrix> es(lap, Eigen::EigenvaluesOnly);
    double lambda2 = es.eigenvalues()(1);
    CHECK(std::abs(generalized_connectivity(lap, f) - lambda2) <= 1e-8);
  }
}

TEST_CASE("Laplacian eigenvalues stay in the closed right half plane") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + trial % 7;
    DirectedGraph g = random_digraph(rng, n, 0.4);
    Matrix lap = laplacian(g);
    CHECK((lap * Vector::Ones(n)).cwiseAbs().maxCoeff() == 0.0);
    Eigen::EigenSolver<Matrix> es(lap, false);
    CHECK(es.eigenvalues().real().minCoeff() >= -1e-10);
  }
}

TEST_CASE("gamma_lap_spectrum") {
  Matrix l2 = laplacian(two_bidirectional());
  Vector f2 = Vector::Constant(2, 0.5);
  Vector eigs = gamma_lap_spectrum(l2, f2);
  CHECK(eigs(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eigs(1) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(gamma_lap_spectrum(Matrix::Zero(3, 3), Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff() ==
        0.0);

  // independent dense route for the 3-cycle
  Matrix l3 = laplacian(three_cycle());
  Vector f3 = Vector::Constant(3, 1.0 / 3.0);
  Matrix gamma = f3.asDiagonal();
  Matrix gllg = gamma * l3 * l3.transpose() * gamma;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gllg + gllg.transpose()));
  Vector expected = es.eigenvalues().reverse();
  CHECK((gamma_lap_spectrum(l3, f3) - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(gamma_lap_spectrum(l3, f3).minCoeff() >= -1e-10);
}

TEST_CASE("spectral_data bundles the derived quantities") {
  SpectralData data = spectral_data(three_cycle());
  CHECK(data.connectivity_a == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(data.gamma_lap_eigs.size() == 3);
  CHECK_THROWS_AS(spectral_data(graph_from({{0, 0}, {1, 0}})), StructureError);
}

TEST_CASE("reconstruct_by_spectrum finds the bidirectional pair") {
  ReconstructionResult rec = reconstruct_by_spectrum(2, {{2.0, 0.0}}, 1e-6);
  REQUIRE(rec.matches.size() == 1);
  CHECK(rec.matches[0].adjacency == two_bidirectional().adjacency);
}

TEST_CASE("reconstruct_by_spectrum finds the directed 3-cycle") {
  std::vector<std::complex<double>> target{{1.5, 0.866}, {1.5, -0.866}};
  ReconstructionResult rec = reconstruct_by_spectrum(3, target, 1e-3);
  REQUIRE_FALSE(rec.matches.empty());
  bool has_cycle = false;
  Matrix fwd = three_cycle().adjacency;
  Matrix bwd = fwd.transpose();
  std::vector<std::complex<double>> full = target;
  full.emplace_back(0.0, 0.0);
  std::sort(full.begin(), full.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  for (const auto& g : rec.matches) {
    if (g.adjacency == fwd || g.adjacency == bwd) has_cycle = true;
    // every returned spectrum re-verifies against the target
    auto spec = laplacian_spectrum(g);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      CHECK(std::abs(spec[k] - full[k]) <= 1e-3);
    }
  }
  CHECK(has_cycle);
}

TEST_CASE("reconstruct_by_spectrum size and shape errors") {
  CHECK_THROWS_AS(reconstruct_by_spectrum(7, {}, 1e-3), DimensionError);
  CHECK_THROWS_AS(reconstruct_by_spectrum(3, {{1.0, 0.0}}, 1e-3), ParameterError);
}

TEST_CASE("reconstruct_by_spectrum reports the nearest miss") {
  // No 2-node binary digraph has Laplacian eigenvalue 5.
  ReconstructionResult rec = reconstruct_by_spectrum(2, {{5.0, 0.0}}, 1e-6);
  CHECK(rec.matches.empty());
  CHECK(rec.nearest_adjacency.size() > 0);
  CHECK(rec.nearest_distance > 0.0);
  CHECK(rec.nearest_spectrum.size() == 2);
}

TEST_CASE("default graphs") {
  DirectedGraph four = default_four_node_graph();
  REQUIRE(four.size() == 4);
  // first deterministic match for the target {3, 1.5 +/- 0.866i}
  std::vector<std::complex<double>> target{{3.0, 0.0},
                                           {1.5, 0.8660254037844386},
                                           {1.5, -0.8660254037844386}};
  ReconstructionResult rec = reconstruct_by_spectrum(4, target, 1e-3);
  REQUIRE_FALSE(rec.matches.empty());
  CHECK(four.adjacency == rec.matches.front().adjacency);
  CHECK(is_strongly_connected(four));

  DirectedGraph nine = default_nine_node_graph();
  CHECK(nine.size() == 9);
  CHECK(is_strongly_connected(nine));
  CHECK_NOTHROW(make_network_data(nine, PinningSet{std::vector<int>{1, 0, 0, 0, 0, 0, 0, 0, 0}}));
}

TEST_CASE("make_network_data computes a(L - D)") {
  NetworkData net = make_network_data(default_four_node_graph(), PinningSet{{1, 0, 0, 0}});
  CHECK(net.connectivity_ld > 0.0);
  CHECK(net.connectivity_ld < net.spectral.connectivity_a);
  CHECK_THROWS_AS(make_network_data(default_four_node_graph(), PinningSet{{0, 0, 0, 0}}),
                  InvariantError);
}
