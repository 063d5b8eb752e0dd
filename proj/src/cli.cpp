#include "pcons/cli.hpp"

#include <CLI11.hpp>

#include <Eigen/Eigenvalues>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "pcons/scenario_io.hpp"

namespace pcons {

namespace fs = std::filesystem;

namespace {

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("PCONS_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
  }();
  return level;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string resolve_output(const std::string& out_dir, const std::string& scenario_path,
                           const std::string& name) {
  if (out_dir.empty()) return name;
  fs::path dir = fs::path(out_dir) / stem_of(scenario_path);
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string resolve_sibling(const std::string& scenario_path, const std::string& name) {
  fs::path p(name);
  if (p.is_absolute()) return name;
  fs::path base = fs::path(scenario_path).parent_path();
  if (base.empty()) return name;
  return (base / p).string();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

Variant protocol_variant(Protocol p) {
  return p == Protocol::full_observer ? Variant::theorem1 : Variant::theorem2;
}

SynthesisConfig config_for(const ScenarioFile& sf) {
  SynthesisConfig cfg = sf.constants;
  cfg.seed = sf.seed;
  cfg.candidate_Es.clear();
  if (sf.gains.initial_E) cfg.candidate_Es.push_back(*sf.gains.initial_E);
  return cfg;
}

GainSet explicit_gains(const ScenarioFile& sf) {
  GainSet gains;
  gains.variant = protocol_variant(sf.protocol);
  if (!sf.gains.E) throw ParameterError("gains: explicit mode requires E");
  gains.E = *sf.gains.E;
  if (sf.gains.Pi) {
    gains.Pi = *sf.gains.Pi;
  } else {
    gains.Pi = Matrix::Identity(sf.plant.states(), sf.plant.states());
  }
  if (sf.gains.K) {
    gains.K = *sf.gains.K;
  } else {
    gains.K = feedback_gain(gains.Pi, sf.constants.eta, sf.plant.B);
  }
  return gains;
}

GainSet resolve_gains(const ScenarioFile& sf, const std::string& scenario_path) {
  switch (sf.gains.mode) {
    case GainsSpec::Mode::synthesize: {
      NetworkData net = make_network_data(sf.graph, sf.pinning);
      return run_algorithm(sf.plant, net, config_for(sf), sf.gains.algorithm);
    }
    case GainsSpec::Mode::file:
      return read_gain_file(resolve_sibling(scenario_path, sf.gains.file));
    case GainsSpec::Mode::explicit_gains:
      return explicit_gains(sf);
  }
  throw ParameterError("gains: unresolved mode");
}

struct CommandResult {
  int exit_code = 0;
  std::string output;  // printed once, under the fan-out mutex
};

CommandResult synthesize_one(const std::string& path, const std::string& out_dir) {
  CommandResult result;
  std::ostringstream out;
  ScenarioFile sf = parse_scenario(path);
  if (sf.gains.mode != GainsSpec::Mode::synthesize) {
    throw ParameterError("synthesize: scenario '" + path + "' does not request synthesis");
  }
  NetworkData net = make_network_data(sf.graph, sf.pinning);
  SynthesisConfig cfg = config_for(sf);
  const std::string report_path = resolve_output(out_dir, path, sf.output.report);
  const std::string gains_path = resolve_output(out_dir, path, sf.output.gains);

  auto start = std::chrono::steady_clock::now();
  try {
    GainSet gains = run_algorithm(sf.plant, net, cfg, sf.gains.algorithm);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();

    std::ostringstream report;
    report << "ALGORITHM "
           << (sf.gains.algorithm == Variant::theorem1 ? "algorithm1" : "algorithm2") << "\n";
    report << "ALPHA " << fmt(gains.alpha) << "\n";
    report << "SWEEP_MARGIN " << fmt(gains.sweep_margin) << "\n";
    report << "OUTER_ITERATIONS " << gains.outer_iterations << "\n";
    report << "SEED " << gains.seed << "\n";
    report << "K";
    for (Eigen::Index c = 0; c < gains.K.cols(); ++c) report << " " << fmt(gains.K(0, c));
    report << "\n";
    if (sf.reference_alpha) report << "REFERENCE_ALPHA " << fmt(*sf.reference_alpha) << "\n";
    report << format_certificates(gains.certificates);

    std::ofstream rf(report_path, std::ios::binary);
    if (!rf) throw ParseError("cannot write report '" + report_path + "'");
    rf << report.str();
    write_gain_file(gains_path, gains);

    if (log_level() >= 1) {
      out << path << ": alpha=" << fmt(gains.alpha) << " gains=" << gains_path
          << " report=" << report_path << " (" << ms << " ms)\n";
    }
    result.output = out.str();
    return result;
  } catch (const InfeasibleError& err) {
    std::ofstream rf(report_path, std::ios::binary);
    if (rf) rf << "SYNTHESIS_INFEASIBLE\n" << err.what() << "\n";
    throw;
  }
}

CommandResult simulate_one(const std::string& path, const std::string& out_dir,
                           const std::optional<std::uint64_t>& seed_override) {
  CommandResult result;
  std::ostringstream out;
  ScenarioFile sf = parse_scenario(path);
  GainSet gains = resolve_gains(sf, path);
  std::uint64_t seed = seed_override.value_or(sf.seed);
  Scenario sc = make_scenario(sf, gains, seed);

  auto start = std::chrono::steady_clock::now();
  Trajectory traj;
  try {
    traj = simulate(sc);
  } catch (const IntegrationError& err) {
    out << path << ": INTEGRATION_FAILURE last_valid_time=" << fmt(err.last_valid_time()) << "\n";
    result.output = out.str();
    std::cout << result.output;
    throw;
  }
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();

  MetricsSeries series = metrics(traj);
  const std::string traj_path = resolve_output(out_dir, path, sf.output.trajectory);
  const std::string metrics_path = resolve_output(out_dir, path, sf.output.metrics);
  {
    std::ofstream tf(traj_path, std::ios::binary);
    if (!tf) throw ParseError("cannot write trajectory '" + traj_path + "'");
    write_trajectory_csv(tf, traj, sf.output.decimation);
  }
  {
    std::ofstream mf(metrics_path, std::ios::binary);
    if (!mf) throw ParseError("cannot write metrics '" + metrics_path + "'");
    write_metrics_csv(mf, series, sf.output.decimation);
  }

  const int last = traj.samples() - 1;
  if (log_level() >= 1) {
    out << "SUMMARY " << path << ": cons_final=" << fmt(series.leader_err[last])
        << " est_final=" << fmt(series.est_err[last])
        << " violations=" << series.violation_count
        << " worst_violation=" << fmt(series.worst_violation) << " runtime_ms=" << ms << "\n"
        << "OUTPUT trajectory=" << traj_path << " metrics=" << metrics_path << "\n";
  }
  result.output = out.str();
  return result;
}

CommandResult verify_one(const std::string& path, const std::string& gains_path, double tol,
                         const std::string& out_dir) {
  CommandResult result;
  ScenarioFile sf = parse_scenario(path);
  GainSet gains;
  if (!gains_path.empty()) {
    gains = read_gain_file(gains_path);
  } else if (sf.gains.mode == GainsSpec::Mode::synthesize) {
    throw ParameterError("verify: provide explicit gains (scenario requests synthesis)");
  } else {
    gains = resolve_gains(sf, path);
  }

  NetworkData net = make_network_data(sf.graph, sf.pinning);
  const Variant variant = protocol_variant(sf.protocol);
  SynthesisConfig cfg = config_for(sf);

  PositivityReport report = positivity_check(gains.E, gains.Pi, sf.plant, net, cfg, variant, tol);

  // Lemma-3 margin for the gain that seeds the Riccati step (the initial E
  // when the scenario records one, otherwise the verified E itself).
  const Matrix riccati_e = sf.gains.initial_E ? *sf.gains.initial_E : gains.E;
  const double kappa = sf.plant.kappa();
  {
    Matrix closed = sf.plant.A - riccati_e * sf.plant.C;
    double margin = -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Matrix> es(closed, false);
    if (es.eigenvalues().real().maxCoeff() < 0.0) {
      SweepResult sweep = min_singular_sweep(closed, spectral_norm(closed) + kappa + 1.0);
      margin = sweep.min_sigma - kappa;
    }
    report.certificates.push_back(
        {"sweep_margin", margin > 0.0, margin, "min sigma - beta||H||", false});
  }

  std::ostringstream body;

  // The quadratic-inequality level, reported for information: Sigma comes
  // from the Riccati solve seeded by the same gain as the sweep check.
  double alpha = std::numeric_limits<double>::quiet_NaN();
  try {
    Matrix p = solve_observer_riccati(sf.plant.A, riccati_e, sf.plant.C, kappa, cfg.delta);
    Matrix sigma = compute_sigma(sf.plant, riccati_e, p);
    alpha = lmi_alpha(gains.E, gains.Pi, sf.plant, net, cfg, sigma, variant);
  } catch (const Error&) {
    // Leave alpha as NaN; the sweep certificate already reports the cause.
  }

  SectorBoundsReport sector = sector_bounds_check(sf.sector, -100.0, 100.0, 0.01);
  report.certificates.push_back(
      {"sector_bounds", sector.pass, sector.worst_slack, "u=" + fmt(sector.worst_u), false});

  // Short probe simulation for the estimation-error identity.
  {
    ScenarioFile probe = sf;
    probe.T = std::min(sf.T, 1.0);
    Scenario sc = make_scenario(probe, gains, sf.seed);
    Trajectory traj = simulate(sc);
    ResidualReport residual = error_dynamics_residual(traj, sc);
    report.certificates.push_back({"error_dynamics_residual", residual.max_residual <= 1e-9,
                                   residual.max_residual,
                                   "agent " + std::to_string(residual.agent) + " t=" +
                                       fmt(residual.at_time),
                                   false});
  }

  body << format_certificates(report);
  body << "LMI_ALPHA " << fmt(alpha) << "\n";
  if (sf.reference_alpha) body << "REFERENCE_ALPHA " << fmt(*sf.reference_alpha) << "\n";

  const std::string report_path = resolve_output(out_dir, path, sf.output.report);
  std::ofstream rf(report_path, std::ios::binary);
  if (rf) rf << body.str();

  result.output = body.str();
  result.exit_code = report.all_pass() ? 0 : 1;
  return result;
}

int reconstruct_cmd(int n, const std::string& spectrum, const std::string& out_path, double tol) {
  std::vector<std::complex<double>> target = parse_spectrum(spectrum);
  ReconstructionResult rec = reconstruct_by_spectrum(n, target, tol);

  std::ostringstream out;
  out << "{\n  \"n\": " << n << ",\n  \"matches\": [";
  for (std::size_t k = 0; k < rec.matches.size(); ++k) {
    const DirectedGraph& g = rec.matches[k];
    out << (k ? "," : "") << "\n    {\n      \"adjacency\": [";
    for (int r = 0; r < g.size(); ++r) {
      out << (r ? "," : "") << "[";
      for (int c = 0; c < g.size(); ++c) {
        out << (c ? "," : "") << g.adjacency(r, c);
      }
      out << "]";
    }
    out << "],\n      \"spectrum\": [";
    auto spec = laplacian_spectrum(g);
    for (std::size_t e = 0; e < spec.size(); ++e) {
      out << (e ? "," : "") << "\"" << fmt(spec[e].real()) << (spec[e].imag() >= 0 ? "+" : "")
          << fmt(spec[e].imag()) << "i\"";
    }
    out << "]\n    }";
  }
  out << "\n  ]";
  if (rec.matches.empty() && rec.nearest_adjacency.size() > 0) {
    out << ",\n  \"nearest\": {\n    \"distance\": " << fmt(rec.nearest_distance)
        << ",\n    \"adjacency\": [";
    for (Eigen::Index r = 0; r < rec.nearest_adjacency.rows(); ++r) {
      out << (r ? "," : "") << "[";
      for (Eigen::Index c = 0; c < rec.nearest_adjacency.cols(); ++c) {
        out << (c ? "," : "") << rec.nearest_adjacency(r, c);
      }
      out << "]";
    }
    out << "]\n  }";
  }
  out << "\n}\n";

  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw ParseError("reconstruct: cannot write '" + out_path + "'");
  f << out.str();
  std::cout << "MATCHES " << rec.matches.size();
  if (rec.matches.empty()) std::cout << " nearest_distance=" << fmt(rec.nearest_distance);
  std::cout << " out=" << out_path << "\n";
  return 0;
}

/// Runs `work(file)` over every file, fanning across `jobs` workers; prints
/// each result in input order and returns the worst exit code.
int fan_out(const std::vector<std::string>& files, int jobs,
            const std::function<CommandResult(const std::string&)>& work) {
  const int count = static_cast<int>(files.size());
  std::vector<CommandResult> results(count);
  std::vector<int> codes(count, 0);

  if (jobs <= 1 || count <= 1) {
    for (int k = 0; k < count; ++k) {
      try {
        results[k] = work(files[k]);
      } catch (const Error& err) {
        std::cerr << "pcons: " << files[k] << ": " << err.what() << "\n";
        codes[k] = err.exit_code();
      } catch (const std::exception& err) {
        std::cerr << "pcons: " << files[k] << ": " << err.what() << "\n";
        codes[k] = 2;
      }
      std::cout << results[k].output;
      codes[k] = std::max(codes[k], results[k].exit_code);
    }
  } else {
    std::atomic<int> next{0};
    std::mutex err_mutex;
    auto worker = [&] {
      for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
        try {
          results[k] = work(files[k]);
        } catch (const Error& err) {
          std::scoped_lock lock(err_mutex);
          std::cerr << "pcons: " << files[k] << ": " << err.what() << "\n";
          codes[k] = err.exit_code();
        } catch (const std::exception& err) {
          std::scoped_lock lock(err_mutex);
          std::cerr << "pcons: " << files[k] << ": " << err.what() << "\n";
          codes[k] = 2;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(jobs, count); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (int k = 0; k < count; ++k) {
      std::cout << results[k].output;
      codes[k] = std::max(codes[k], results[k].exit_code);
    }
  }
  int worst = 0;
  for (int code : codes) worst = std::max(worst, code);
  return worst;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"pcons -- observer-based consensus toolkit for positive multi-agent systems"};
  app.require_subcommand(1);

  std::vector<std::string> synth_files, sim_files;
  std::string verify_file, gains_file, out_dir, reconstruct_out = "reconstruction.json";
  std::string spectrum;
  int jobs = 1, reconstruct_n = 0;
  double verify_tol = 1e-9, reconstruct_tol = 1e-3;
  std::uint64_t seed_value = 0;
  bool seed_given = false;

  CLI::App* synth = app.add_subcommand("synthesize", "Run the gain-synthesis algorithm on scenario files");
  synth->add_option("files", synth_files, "scenario files")->required()->expected(-1);
  synth->add_option("--out-dir", out_dir, "base directory for outputs");
  synth->add_option("--jobs", jobs, "parallel workers for multiple files");

  CLI::App* sim = app.add_subcommand("simulate", "Integrate the closed-loop network and write CSVs");
  sim->add_option("files", sim_files, "scenario files")->required()->expected(-1);
  sim->add_option("--out-dir", out_dir, "base directory for outputs");
  sim->add_option("--seed", seed_value, "override the scenario seed")->each([&](const std::string&) {
    seed_given = true;
  });
  sim->add_option("--jobs", jobs, "parallel workers for multiple files");

  CLI::App* verify = app.add_subcommand("verify", "Check theorem certificates for explicit gains");
  verify->add_option("file", verify_file, "scenario file")->required();
  verify->add_option("--gains", gains_file, "gain file to verify (overrides the scenario gains)");
  verify->add_option("--tol", verify_tol, "sign/Metzler tolerance (use ~1e-4 for 4-digit published gains)");
  verify->add_option("--out-dir", out_dir, "base directory for the report");

  CLI::App* rec = app.add_subcommand("reconstruct", "Search digraphs matching a Laplacian spectrum");
  rec->add_option("--n", reconstruct_n, "node count (2..6)")->required();
  rec->add_option("--spectrum", spectrum, "comma-separated nonzero eigenvalues, e.g. '3,1.5+0.866i,1.5-0.866i'")
      ->required();
  rec->add_option("--out", reconstruct_out, "output file");
  rec->add_option("--tol", reconstruct_tol, "spectrum matching tolerance");

  std::vector<const char*> argv;
  argv.push_back("pcons");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      return fan_out(synth_files, jobs,
                     [&](const std::string& f) { return synthesize_one(f, out_dir); });
    }
    if (sim->parsed()) {
      std::optional<std::uint64_t> seed;
      if (seed_given) seed = seed_value;
      return fan_out(sim_files, jobs,
                     [&](const std::string& f) { return simulate_one(f, out_dir, seed); });
    }
    if (verify->parsed()) {
      CommandResult result = verify_one(verify_file, gains_file, verify_tol, out_dir);
      std::cout << result.output;
      return result.exit_code;
    }
    if (rec->parsed()) {
      return reconstruct_cmd(reconstruct_n, spectrum, reconstruct_out, reconstruct_tol);
    }
  } catch (const Error& err) {
    std::cerr << "pcons: " << err.what() << "\n";
    return err.exit_code();
  } catch (const std::exception& err) {
    std::cerr << "pcons: " << err.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace pcons
