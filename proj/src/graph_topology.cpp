#include "pcons/graph_topology.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>

namespace pcons {

int PinningSet::pinned_count() const {
  int count = 0;
  for (int flag : d) count += (flag != 0) ? 1 : 0;
  return count;
}

Matrix PinningSet::as_matrix() const {
  Matrix m = Matrix::Zero(size(), size());
  for (int i = 0; i < size(); ++i) m(i, i) = d[i] ? 1.0 : 0.0;
  return m;
}

void validate_graph(const DirectedGraph& g) {
  const Matrix& a = g.adjacency;
  if (a.rows() != a.cols()) throw DimensionError("graph: adjacency must be square");
  require_finite(a, "graph");
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) throw InvariantError("graph: self-loops are not allowed");
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) < 0.0) throw InvariantError("graph: negative edge weight");
    }
  }
}

Matrix laplacian(const DirectedGraph& g) {
  validate_graph(g);
  const Matrix& a = g.adjacency;
  const Eigen::Index n = a.rows();
  Matrix lap = -a;
  for (Eigen::Index i = 0; i < n; ++i) {
    lap(i, i) = a.row(i).sum();
  }
  return lap;
}

namespace {

// Reachability from `root` along directed edges j -> i (a_ij > 0). When
// `reverse` is set, edges are walked against their direction.
std::vector<char> reachable(const Matrix& a, int root, bool reverse) {
  const int n = static_cast<int>(a.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack{root};
  seen[root] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w = 0; w < n; ++w) {
      double edge = reverse ? a(v, w) : a(w, v);
      if (edge > 0.0 && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

bool all_reached(const std::vector<char>& seen) {
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

}  // namespace

bool is_strongly_connected(const DirectedGraph& g) {
  validate_graph(g);
  if (g.size() <= 1) return true;
  return all_reached(reachable(g.adjacency, 0, false)) &&
         all_reached(reachable(g.adjacency, 0, true));
}

bool has_spanning_tree(const DirectedGraph& g) {
  validate_graph(g);
  if (g.size() <= 1) return true;
  for (int root = 0; root < g.size(); ++root) {
    if (all_reached(reachable(g.adjacency, root, false))) return true;
  }
  return false;
}

Vector left_perron_vector(const Matrix& lap, double tol) {
  if (lap.rows() != lap.cols()) throw DimensionError("left_perron_vector: L must be square");
  require_finite(lap, "left_perron_vector");
  const Eigen::Index n = lap.rows();
  if (n == 1) return Vector::Ones(1);

  Eigen::JacobiSVD<Matrix> svd(lap.transpose(), Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double scale = std::max(sv(0), 1.0);
  if (sv(n - 1) > 1e-10 * scale) {
    throw StructureError("left_perron_vector: L^T has no null vector (not a Laplacian?)");
  }
  if (n >= 2 && sv(n - 2) <= 1e-10 * scale) {
    throw StructureError("left_perron_vector: null space is not one-dimensional (graph not strongly connected)");
  }

  Vector f = svd.matrixV().col(n - 1);
  if (f.sum() < 0.0) f = -f;
  f /= f.sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (f(i) <= tol) {
      throw StructureError("left_perron_vector: component " + std::to_string(i + 1) +
                           " not strictly positive (graph not strongly connected)");
    }
  }
  return f;
}

double generalized_connectivity(const Matrix& m, const Vector& f) {
  if (m.rows() != m.cols()) throw DimensionError("generalized_connectivity: M must be square");
  if (f.size() != m.rows()) throw DimensionError("generalized_connectivity: f/M size mismatch");
  const Eigen::Index n = m.rows();
  if (n == 1) throw ParameterError("generalized_connectivity: constraint subspace is empty for n = 1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (f(i) <= 0.0) throw StructureError("generalized_connectivity: f must be strictly positive");
  }

  Matrix gamma = f.asDiagonal();
  Matrix m_hat = 0.5 * (gamma * m + m.transpose() * gamma);

  // Orthonormal basis of {x : f^T x = 0} from a full QR of f.
  Eigen::HouseholderQR<Matrix> qr(f);
  Matrix q = qr.householderQ();
  Matrix basis = q.rightCols(n - 1);

  Matrix a_proj = basis.transpose() * m_hat * basis;
  a_proj = 0.5 * (a_proj + a_proj.transpose());
  Matrix b_proj = basis.transpose() * gamma * basis;
  b_proj = 0.5 * (b_proj + b_proj.transpose());

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a_proj, b_proj, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  return es.eigenvalues().minCoeff();
}

Vector gamma_lap_spectrum(const Matrix& lap, const Vector& f) {
  if (lap.rows() != lap.cols()) throw DimensionError("gamma_lap_spectrum: L must be square");
  if (f.size() != lap.rows()) throw DimensionError("gamma_lap_spectrum: f/L size mismatch");
  Matrix gamma = f.asDiagonal();
  Matrix gllg = gamma * lap * lap.transpose() * gamma;
  gllg = 0.5 * (gllg + gllg.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gllg, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

SpectralData spectral_data(const DirectedGraph& g) {
  if (!is_strongly_connected(g)) {
    throw StructureError("spectral_data: graph must be strongly connected");
  }
  SpectralData data;
  data.laplacian = laplacian(g);
  data.f = left_perron_vector(data.laplacian);
  data.connectivity_a = (g.size() > 1) ? generalized_connectivity(data.laplacian, data.f) : 0.0;
  data.gamma_lap_eigs = gamma_lap_spectrum(data.laplacian, data.f);
  return data;
}

NetworkData make_network_data(const DirectedGraph& g, const PinningSet& pinning) {
  if (pinning.size() != g.size()) throw DimensionError("network: pinning/graph size mismatch");
  if (pinning.pinned_count() < 1) throw InvariantError("network: at least one node must be pinned");
  NetworkData net;
  net.graph = g;
  net.pinning = pinning;
  net.spectral = spectral_data(g);
  if (g.size() > 1) {
    net.connectivity_ld =
        generalized_connectivity(net.spectral.laplacian - pinning.as_matrix(), net.spectral.f);
  }
  return net;
}

namespace {

std::vector<std::complex<double>> sorted_eigs(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> eigs(m.rows());
  for (Eigen::Index k = 0; k < m.rows(); ++k) eigs[k] = es.eigenvalues()(k);
  std::sort(eigs.begin(), eigs.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return eigs;
}

double spectrum_distance(const std::vector<std::complex<double>>& a,
                         const std::vector<std::complex<double>>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

Matrix adjacency_from_mask(int n, std::uint64_t mask) {
  Matrix a = Matrix::Zero(n, n);
  int bit = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mask & (std::uint64_t{1} << bit)) a(i, j) = 1.0;
      ++bit;
    }
  }
  return a;
}

struct ReconstructChunk {
  std::vector<std::pair<std::uint64_t, Matrix>> matches;
  std::uint64_t nearest_mask = 0;
  double nearest_distance = std::numeric_limits<double>::infinity();
};

ReconstructChunk scan_masks(int n, std::uint64_t begin, std::uint64_t end,
                            const std::vector<std::complex<double>>& target, double tol) {
  ReconstructChunk chunk;
  for (std::uint64_t mask = begin; mask < end; ++mask) {
    Matrix a = adjacency_from_mask(n, mask);
    DirectedGraph g{a, {}};
    if (!is_strongly_connected(g)) continue;
    Matrix lap = -a;
    for (int i = 0; i < n; ++i) lap(i, i) = a.row(i).sum();
    double dist = spectrum_distance(sorted_eigs(lap), target);
    if (dist <= tol) {
      chunk.matches.emplace_back(mask, std::move(a));
    } else if (dist < chunk.nearest_distance) {
      chunk.nearest_distance = dist;
      chunk.nearest_mask = mask;
    }
  }
  return chunk;
}

}  // namespace

std::vector<std::complex<double>> laplacian_spectrum(const DirectedGraph& g) {
  return sorted_eigs(laplacian(g));
}

ReconstructionResult reconstruct_by_spectrum(int n,
                                             const std::vector<std::complex<double>>& target,
                                             double tol) {
  if (n < 2 || n > 6) {
    throw DimensionError("reconstruct_by_spectrum: n must be between 2 and 6");
  }
  if (static_cast<int>(target.size()) != n - 1) {
    throw ParameterError("reconstruct_by_spectrum: expected " + std::to_string(n - 1) +
                         " nonzero eigenvalues for n = " + std::to_string(n));
  }

  // The zero eigenvalue is structural and omitted from published lists.
  std::vector<std::complex<double>> full_target = target;
  full_target.emplace_back(0.0, 0.0);
  std::sort(full_target.begin(), full_target.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });

  const int bits = n * (n - 1);
  const std::uint64_t total = std::uint64_t{1} << bits;

  unsigned workers = 1;
  if (bits >= 18) {
    workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  }

  std::vector<ReconstructChunk> chunks(workers);
  if (workers == 1) {
    chunks[0] = scan_masks(n, 0, total, full_target, tol);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t span = total / workers + 1;
    for (unsigned w = 0; w < workers; ++w) {
      std::uint64_t begin = w * span;
      std::uint64_t end = std::min(total, begin + span);
      pool.emplace_back([&, w, begin, end] { chunks[w] = scan_masks(n, begin, end, full_target, tol); });
    }
    for (auto& t : pool) t.join();
  }

  ReconstructionResult result;
  std::uint64_t nearest_mask = 0;
  result.nearest_distance = std::numeric_limits<double>::infinity();
  for (const auto& chunk : chunks) {
    for (const auto& [mask, adj] : chunk.matches) {
      (void)mask;
      result.matches.push_back(DirectedGraph{adj, {}});
    }
    if (chunk.nearest_distance < result.nearest_distance) {
      result.nearest_distance = chunk.nearest_distance;
      nearest_mask = chunk.nearest_mask;
    }
  }
  if (std::isfinite(result.nearest_distance)) {
    result.nearest_adjacency = adjacency_from_mask(n, nearest_mask);
    DirectedGraph g{result.nearest_adjacency, {}};
    result.nearest_spectrum = laplacian_spectrum(g);
  }
  return result;
}

DirectedGraph default_four_node_graph() {
  static const DirectedGraph graph = [] {
    std::vector<std::complex<double>> target{{3.0, 0.0}, {1.5, 0.8660254037844386}, {1.5, -0.8660254037844386}};
    ReconstructionResult rec = reconstruct_by_spectrum(4, target, 1e-3);
    if (!rec.matches.empty()) return rec.matches.front();
    return DirectedGraph{rec.nearest_adjacency, {}};
  }();
  return graph;
}

DirectedGraph default_nine_node_graph() {
  const int n = 9;
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, (i + 1) % n) = 1.0;  // receive from the next node around the ring
    a((i + 1) % n, i) = 1.0;  // and from the previous one
  }
  a(5, 1) = 1.0;
  a(8, 4) = 1.0;
  a(2, 7) = 1.0;
  return DirectedGraph{a, {}};
}

}  // namespace pcons
