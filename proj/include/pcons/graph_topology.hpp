#pragma once

#include <complex>
#include <string>
#include <vector>

#include "pcons/matrix_analysis.hpp"

namespace pcons {

/// Directed graph over n nodes. The adjacency convention follows the
/// row-receiver form used throughout the toolkit: adjacency(i, j) > 0 means
/// information flows from node j to node i. Zero diagonal, weights >= 0.
struct DirectedGraph {
  Matrix adjacency;
  std::vector<std::string> labels;  // optional; defaults to "1".."n"

  int size() const { return static_cast<int>(adjacency.rows()); }
};

/// Per-node pinning flags d_i in {0,1}; at least one pinned node is required
/// for synthesis.
struct PinningSet {
  std::vector<int> d;

  int size() const { return static_cast<int>(d.size()); }
  int pinned_count() const;
  Matrix as_matrix() const;  // diag(d)
};

/// Spectral quantities derived from a strongly connected digraph.
struct SpectralData {
  Matrix laplacian;
  Vector f;                 // left Perron vector, positive, sums to 1
  double connectivity_a;    // a(L)
  Vector gamma_lap_eigs;    // eigenvalues of Gamma L L^T Gamma, descending

  Matrix gamma() const { return Matrix(f.asDiagonal()); }
};

void validate_graph(const DirectedGraph& g);

/// L = D - A with in-degree diagonal d_ii = sum_{j != i} a_ij; row sums are
/// exactly zero.
Matrix laplacian(const DirectedGraph& g);

bool is_strongly_connected(const DirectedGraph& g);

/// True iff some root reaches every node along directed edges.
bool has_spanning_tree(const DirectedGraph& g);

/// Positive left null vector of L normalized to sum 1. Throws StructureError
/// if the null space of L^T is not one-dimensional or the vector is not
/// strictly positive (graph not strongly connected).
Vector left_perron_vector(const Matrix& lap, double tol = 1e-9);

/// Generalized algebraic connectivity: min of x^T M_hat x / x^T Gamma x over
/// {x : f^T x = 0, x != 0}, with M_hat = (Gamma M + M^T Gamma)/2 and
/// Gamma = diag(f). Also used with M = L - D, keeping f from L.
double generalized_connectivity(const Matrix& m, const Vector& f);

/// Eigenvalues of Gamma L L^T Gamma sorted descending.
Vector gamma_lap_spectrum(const Matrix& lap, const Vector& f);

SpectralData spectral_data(const DirectedGraph& g);

/// Graph, pinning set and every derived spectral quantity the synthesis
/// pipeline consumes.
struct NetworkData {
  DirectedGraph graph;
  PinningSet pinning;
  SpectralData spectral;
  double connectivity_ld = 0.0;  // a(L - D), Rayleigh formula with f from L
};

NetworkData make_network_data(const DirectedGraph& g, const PinningSet& pinning);

struct ReconstructionResult {
  std::vector<DirectedGraph> matches;      // deterministic enumeration order
  Matrix nearest_adjacency;                // best candidate when no exact match
  double nearest_distance = 0.0;
  std::vector<std::complex<double>> nearest_spectrum;
};

/// Enumerates all binary zero-diagonal adjacency matrices on n <= 6 nodes and
/// returns every strongly connected candidate whose Laplacian spectrum equals
/// {0} union target within tol (the obligatory zero eigenvalue is appended to
/// the target automatically). Spectra are compared after sorting by real part
/// then imaginary part.
ReconstructionResult reconstruct_by_spectrum(int n,
                                             const std::vector<std::complex<double>>& target,
                                             double tol);

/// Laplacian eigenvalues of a graph, sorted by (real, imag).
std::vector<std::complex<double>> laplacian_spectrum(const DirectedGraph& g);

/// The 4-node digraph shipped as the stock small-network fixture: the first
/// strongly connected spectrum match for the target {3, 1.5 +/- 0.866i}.
DirectedGraph default_four_node_graph();

/// A 9-node strongly connected fixture used by the larger bundled scenarios.
DirectedGraph default_nine_node_graph();

}  // namespace pcons
