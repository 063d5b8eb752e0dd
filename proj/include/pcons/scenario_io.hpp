#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pcons/simulator.hpp"

namespace pcons {

/// Parsed scenario file before gains are resolved. Matrices are row-major
/// arrays of arrays in the JSON; unknown keys anywhere are rejected.
struct GainsSpec {
  enum class Mode { explicit_gains, synthesize, file };
  Mode mode = Mode::explicit_gains;
  Variant algorithm = Variant::theorem1;  // synthesize mode
  std::optional<Matrix> E;
  std::optional<Matrix> Pi;
  std::optional<Matrix> K;
  std::optional<Matrix> initial_E;  // Lemma-3 candidate / Riccati context
  std::string file;                 // gain-file path (file mode)
};

struct InitialStates {
  bool random = true;
  Vector s0;
  std::vector<Vector> x0;
  std::vector<Vector> xhat0;
};

struct OutputSpec {
  std::string trajectory = "trajectory.csv";
  std::string metrics = "metrics.csv";
  std::string gains = "gains.json";
  std::string report = "report.txt";
  int decimation = 1;
};

struct ScenarioFile {
  PlantModel plant;
  SectorNonlinearity sector;
  AgentNonlinearity agent_nl;
  DirectedGraph graph;
  PinningSet pinning;
  SynthesisConfig constants;
  Protocol protocol = Protocol::full_observer;
  GainsSpec gains;
  double T = 20.0;
  double h = 1e-3;
  std::uint64_t seed = 0;
  bool clamp = false;
  double positivity_tol = 1e-8;
  InitialStates initial;
  OutputSpec output;
  std::optional<double> reference_alpha;  // informational metadata from the source material
};

ScenarioFile parse_scenario(const std::string& path);
ScenarioFile parse_scenario_text(const std::string& text, const std::string& origin);

/// Parses a comma-separated complex list like "3,1.5+0.866i,1.5-0.866i".
std::vector<std::complex<double>> parse_spectrum(const std::string& text);

std::string serialize_scenario(const ScenarioFile& sf);

/// Structural equality used by the round-trip tests.
bool scenario_equal(const ScenarioFile& a, const ScenarioFile& b);

void write_gain_file(const std::string& path, const GainSet& gains);
GainSet read_gain_file(const std::string& path);

/// Deterministic initial-state draw: uniform [0, 2] from the seed, ordered
/// s, x_1..x_n, xhat_1..xhat_n.
void resolve_initial_states(const ScenarioFile& sf, std::uint64_t seed, SimulationSettings* sim);

/// Builds the concrete simulator input. Explicit/loaded gains are used as-is;
/// synthesize mode must be resolved by the caller first (the GainSet arg).
Scenario make_scenario(const ScenarioFile& sf, const GainSet& gains, std::uint64_t seed);

/// CSV with header `t,s_1..s_m,x{i}_1..,xhat{i}_1..,u{i}_1..,cons_err,est_err`
/// printed at 17 significant digits; decimation keeps every k-th sample.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int decimation);

void write_metrics_csv(std::ostream& out, const MetricsSeries& series, int decimation);

std::string format_certificates(const PositivityReport& report);

}  // namespace pcons
