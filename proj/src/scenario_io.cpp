#include "pcons/scenario_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace pcons {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError("scenario: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& block,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(block, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(block, "unknown key '" + item.key() + "'");
  }
}

const json& require(const json& obj, const std::string& block, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(block, std::string("missing key '") + key + "'");
  return *it;
}

double get_number(const json& obj, const std::string& block, const char* key) {
  const json& v = require(obj, block, key);
  if (!v.is_number()) fail(block + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& block, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_number()) fail(block + "." + key, "expected a number");
  return v.get<double>();
}

bool get_bool_or(const json& obj, const std::string& block, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_boolean()) fail(block + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& block, const char* key) {
  const json& v = require(obj, block, key);
  if (!v.is_string()) fail(block + "." + key, "expected a string");
  return v.get<std::string>();
}

Matrix parse_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) fail(where, "expected an array of rows");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) fail(where, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[r][c].is_number()) fail(where, "matrix entries must be numbers");
      m(r, c) = v[r][c].get<double>();
    }
  }
  return m;
}

Matrix get_matrix(const json& obj, const std::string& block, const char* key) {
  return parse_matrix(require(obj, block, key), block + "." + key);
}

Vector parse_vector(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array");
  Vector out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) fail(where, "vector entries must be numbers");
    out(k) = v[k].get<double>();
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v(k));
  return arr;
}

SectorNonlinearity parse_sector(const json& v, double m_l, double m_h) {
  SectorNonlinearity nl;
  nl.m_l = m_l;
  nl.m_h = m_h;
  if (v.is_null()) {
    nl.kind = SectorNonlinearity::Kind::identity;
    return nl;
  }
  check_keys(v, "plant.sector", {"kind", "gain", "ripple", "u", "value"});
  std::string kind = get_string(v, "plant.sector", "kind");
  if (kind == "identity") {
    nl.kind = SectorNonlinearity::Kind::identity;
  } else if (kind == "sine_ripple") {
    nl.kind = SectorNonlinearity::Kind::sine_ripple;
    nl.gain = get_number_or(v, "plant.sector", "gain", 1.2);
    nl.ripple = get_number_or(v, "plant.sector", "ripple", 0.3);
  } else if (kind == "table") {
    nl.kind = SectorNonlinearity::Kind::table;
    Vector u = parse_vector(require(v, "plant.sector", "u"), "plant.sector.u");
    Vector val = parse_vector(require(v, "plant.sector", "value"), "plant.sector.value");
    nl.knots_u.assign(u.data(), u.data() + u.size());
    nl.knots_v.assign(val.data(), val.data() + val.size());
  } else {
    fail("plant.sector.kind", "unknown kind '" + kind + "'");
  }
  validate_sector(nl);
  return nl;
}

AgentNonlinearity parse_agent_nl(const json& v, double beta) {
  AgentNonlinearity g;
  g.beta = beta;
  if (v.is_null()) return g;
  check_keys(v, "plant.g", {"kind", "rate", "amplitude", "frequency"});
  std::string kind = get_string(v, "plant.g", "kind");
  if (kind == "zero") {
    g.kind = AgentNonlinearity::Kind::zero;
  } else if (kind == "state_trig") {
    g.kind = AgentNonlinearity::Kind::state_trig;
    g.rate = get_number_or(v, "plant.g", "rate", 0.31);
  } else if (kind == "bounded_sine") {
    g.kind = AgentNonlinearity::Kind::bounded_sine;
    g.amplitude = get_number_or(v, "plant.g", "amplitude", 1.0);
    g.frequency = get_number_or(v, "plant.g", "frequency", 1.0);
  } else {
    fail("plant.g.kind", "unknown kind '" + kind + "'");
  }
  return g;
}

std::complex<double> parse_complex_token(std::string tok) {
  // Accepts forms like "3", "-1.5", "1.5+0.866i", "1.5-0.866i", "0.5i".
  auto strip = [](std::string s) {
    std::string out;
    for (char c : s) {
      if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
  };
  tok = strip(tok);
  if (tok.empty()) throw ParseError("spectrum: empty entry");
  if (tok.back() != 'i') return {std::stod(tok), 0.0};
  tok.pop_back();
  // Find the split between real and imaginary parts (a sign not in position 0
  // and not following an exponent marker).
  for (std::size_t k = tok.size(); k-- > 1;) {
    char c = tok[k];
    if ((c == '+' || c == '-') && tok[k - 1] != 'e' && tok[k - 1] != 'E') {
      double re = std::stod(tok.substr(0, k));
      std::string imag = tok.substr(k);
      if (imag == "+") imag = "1";
      if (imag == "-") imag = "-1";
      return {re, std::stod(imag)};
    }
  }
  if (tok.empty() || tok == "+") return {0.0, 1.0};
  if (tok == "-") return {0.0, -1.0};
  return {0.0, std::stod(tok)};
}

}  // namespace

std::vector<std::complex<double>> parse_spectrum(const std::string& text) {
  std::vector<std::complex<double>> out;
  std::string tok;
  std::istringstream stream(text);
  while (std::getline(stream, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_complex_token(tok));
  }
  return out;
}

ScenarioFile parse_scenario_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(origin + ": " + err.what());
  }
  check_keys(root, origin,
             {"plant", "topology", "constants", "protocol", "gains", "simulation", "output",
              "reference_alpha"});

  ScenarioFile sf;

  // plant
  {
    const json& p = require(root, origin, "plant");
    check_keys(p, "plant", {"A", "H", "B", "C", "beta", "m_l", "m_h", "sector", "g"});
    sf.plant.A = get_matrix(p, "plant", "A");
    sf.plant.H = get_matrix(p, "plant", "H");
    sf.plant.B = get_matrix(p, "plant", "B");
    sf.plant.C = get_matrix(p, "plant", "C");
    sf.plant.beta = get_number(p, "plant", "beta");
    sf.plant.m_l = get_number(p, "plant", "m_l");
    sf.plant.m_h = get_number(p, "plant", "m_h");
    validate_plant(sf.plant);
    sf.sector = parse_sector(p.contains("sector") ? p["sector"] : json(), sf.plant.m_l, sf.plant.m_h);
    sf.agent_nl = parse_agent_nl(p.contains("g") ? p["g"] : json(), sf.plant.beta);
  }

  // topology
  {
    const json& t = require(root, origin, "topology");
    check_keys(t, "topology", {"n", "adjacency", "pinned", "reconstruct"});
    const json& nval = require(t, "topology", "n");
    if (!nval.is_number_integer()) fail("topology.n", "expected an integer");
    const int n = nval.get<int>();
    if (n < 1) fail("topology.n", "must be >= 1");

    if (t.contains("adjacency") && t.contains("reconstruct")) {
      fail("topology", "give either 'adjacency' or 'reconstruct', not both");
    }
    if (t.contains("adjacency")) {
      Matrix adj = get_matrix(t, "topology", "adjacency");
      if (adj.rows() != n || adj.cols() != n) {
        throw DimensionError("scenario: topology.adjacency must be " + std::to_string(n) + "x" +
                             std::to_string(n));
      }
      sf.graph.adjacency = adj;
    } else if (t.contains("reconstruct")) {
      const json& r = t["reconstruct"];
      check_keys(r, "topology.reconstruct", {"spectrum", "tol"});
      std::vector<std::complex<double>> target;
      for (const json& entry : require(r, "topology.reconstruct", "spectrum")) {
        if (entry.is_number()) {
          target.emplace_back(entry.get<double>(), 0.0);
        } else if (entry.is_string()) {
          target.push_back(parse_complex_token(entry.get<std::string>()));
        } else {
          fail("topology.reconstruct.spectrum", "entries must be numbers or strings");
        }
      }
      double tol = get_number_or(r, "topology.reconstruct", "tol", 1e-3);
      ReconstructionResult rec = reconstruct_by_spectrum(n, target, tol);
      if (rec.matches.empty()) {
        throw InvariantError("scenario: no graph on " + std::to_string(n) +
                             " nodes matches the requested spectrum (nearest distance " +
                             std::to_string(rec.nearest_distance) + ")");
      }
      sf.graph = rec.matches.front();
    } else {
      fail("topology", "need either 'adjacency' or 'reconstruct'");
    }
    validate_graph(sf.graph);

    sf.pinning.d.assign(n, 0);
    for (const json& id : require(t, "topology", "pinned")) {
      if (!id.is_number_integer()) fail("topology.pinned", "expected node ids");
      int node = id.get<int>();
      if (node < 1 || node > n) fail("topology.pinned", "node id out of range");
      sf.pinning.d[node - 1] = 1;
    }
  }

  // constants
  {
    const json& c = require(root, origin, "constants");
    check_keys(c, "constants", {"eta", "phi", "mu", "delta", "s_bar"});
    sf.constants.eta = get_number(c, "constants", "eta");
    sf.constants.phi = get_number(c, "constants", "phi");
    sf.constants.mu = get_number(c, "constants", "mu");
    sf.constants.delta = get_number(c, "constants", "delta");
    sf.constants.s_bar = get_number_or(c, "constants", "s_bar", 0.0);
  }

  // protocol
  {
    std::string proto = get_string(root, origin, "protocol");
    if (proto == "full_observer") {
      sf.protocol = Protocol::full_observer;
    } else if (proto == "distributed_observer") {
      sf.protocol = Protocol::distributed_observer;
    } else {
      fail("protocol", "expected 'full_observer' or 'distributed_observer'");
    }
  }

  // gains
  {
    const json& g = require(root, origin, "gains");
    check_keys(g, "gains", {"synthesize", "file", "E", "Pi", "K", "initial_E", "search"});
    const bool has_synth = g.contains("synthesize");
    const bool has_file = g.contains("file");
    const bool has_explicit = g.contains("E") || g.contains("Pi") || g.contains("K");
    if ((has_synth && has_file) || (has_synth && has_explicit) || (has_file && has_explicit)) {
      fail("gains", "choose one of synthesize / file / explicit E,Pi,K");
    }
    if (has_synth) {
      sf.gains.mode = GainsSpec::Mode::synthesize;
      std::string alg = get_string(g, "gains", "synthesize");
      if (alg == "algorithm1") {
        sf.gains.algorithm = Variant::theorem1;
      } else if (alg == "algorithm2") {
        sf.gains.algorithm = Variant::theorem2;
      } else {
        fail("gains.synthesize", "expected 'algorithm1' or 'algorithm2'");
      }
    } else if (has_file) {
      sf.gains.mode = GainsSpec::Mode::file;
      sf.gains.file = get_string(g, "gains", "file");
    } else {
      sf.gains.mode = GainsSpec::Mode::explicit_gains;
      if (g.contains("E")) sf.gains.E = get_matrix(g, "gains", "E");
      if (g.contains("Pi")) sf.gains.Pi = get_matrix(g, "gains", "Pi");
      if (g.contains("K")) sf.gains.K = get_matrix(g, "gains", "K");
    }
    if (g.contains("initial_E")) sf.gains.initial_E = get_matrix(g, "gains", "initial_E");
    if (g.contains("search")) {
      const json& s = g["search"];
      check_keys(s, "gains.search",
                 {"max_outer", "e_iterations", "e_step", "pi_min", "pi_max", "pi_grid",
                  "pi_family", "initial_pi"});
      sf.constants.max_outer = static_cast<int>(get_number_or(s, "gains.search", "max_outer", 6));
      sf.constants.e_iterations =
          static_cast<int>(get_number_or(s, "gains.search", "e_iterations", 400));
      sf.constants.e_step = get_number_or(s, "gains.search", "e_step", 1.0);
      sf.constants.pi_min = get_number_or(s, "gains.search", "pi_min", 0.05);
      sf.constants.pi_max = get_number_or(s, "gains.search", "pi_max", 20.0);
      sf.constants.pi_grid = static_cast<int>(get_number_or(s, "gains.search", "pi_grid", 64));
      sf.constants.initial_pi = get_number_or(s, "gains.search", "initial_pi", 0.5);
      if (s.contains("pi_family")) {
        std::string fam = get_string(s, "gains.search", "pi_family");
        if (fam == "scaled_identity") {
          sf.constants.pi_family = PiFamily::scaled_identity;
        } else if (fam == "diagonal") {
          sf.constants.pi_family = PiFamily::diagonal;
        } else {
          fail("gains.search.pi_family", "expected 'scaled_identity' or 'diagonal'");
        }
      }
    }
  }

  // simulation
  {
    const json& s = require(root, origin, "simulation");
    check_keys(s, "simulation",
               {"T", "h", "seed", "initial_states", "clamp", "positivity_tol"});
    sf.T = get_number(s, "simulation", "T");
    sf.h = get_number(s, "simulation", "h");
    if (sf.h <= 0.0 || sf.T < sf.h) {
      throw InvariantError("scenario: simulation needs h > 0 and T >= h");
    }
    sf.seed = static_cast<std::uint64_t>(get_number_or(s, "simulation", "seed", 0));
    sf.clamp = get_bool_or(s, "simulation", "clamp", false);
    sf.positivity_tol = get_number_or(s, "simulation", "positivity_tol", 1e-8);
    const json& init = require(s, "simulation", "initial_states");
    if (init.is_string() && init.get<std::string>() == "random") {
      sf.initial.random = true;
    } else if (init.is_object()) {
      check_keys(init, "simulation.initial_states", {"s", "x", "xhat"});
      sf.initial.random = false;
      sf.initial.s0 = parse_vector(require(init, "simulation.initial_states", "s"),
                                   "simulation.initial_states.s");
      for (const json& row : require(init, "simulation.initial_states", "x")) {
        sf.initial.x0.push_back(parse_vector(row, "simulation.initial_states.x"));
      }
      for (const json& row : require(init, "simulation.initial_states", "xhat")) {
        sf.initial.xhat0.push_back(parse_vector(row, "simulation.initial_states.xhat"));
      }
    } else {
      fail("simulation.initial_states", "expected 'random' or an object with s/x/xhat");
    }
  }

  // output
  if (root.contains("output")) {
    const json& o = root["output"];
    check_keys(o, "output", {"trajectory", "metrics", "gains", "report", "decimation"});
    if (o.contains("trajectory")) sf.output.trajectory = get_string(o, "output", "trajectory");
    if (o.contains("metrics")) sf.output.metrics = get_string(o, "output", "metrics");
    if (o.contains("gains")) sf.output.gains = get_string(o, "output", "gains");
    if (o.contains("report")) sf.output.report = get_string(o, "output", "report");
    sf.output.decimation = static_cast<int>(get_number_or(o, "output", "decimation", 1));
    if (sf.output.decimation < 1) fail("output.decimation", "must be >= 1");
  }

  if (root.contains("reference_alpha")) {
    if (!root["reference_alpha"].is_number()) fail("reference_alpha", "expected a number");
    sf.reference_alpha = root["reference_alpha"].get<double>();
  }
  return sf;
}

ScenarioFile parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("scenario: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

std::string serialize_scenario(const ScenarioFile& sf) {
  json root;
  json plant;
  plant["A"] = matrix_to_json(sf.plant.A);
  plant["H"] = matrix_to_json(sf.plant.H);
  plant["B"] = matrix_to_json(sf.plant.B);
  plant["C"] = matrix_to_json(sf.plant.C);
  plant["beta"] = sf.plant.beta;
  plant["m_l"] = sf.plant.m_l;
  plant["m_h"] = sf.plant.m_h;
  {
    json sector;
    switch (sf.sector.kind) {
      case SectorNonlinearity::Kind::identity:
        sector["kind"] = "identity";
        break;
      case SectorNonlinearity::Kind::sine_ripple:
        sector["kind"] = "sine_ripple";
        sector["gain"] = sf.sector.gain;
        sector["ripple"] = sf.sector.ripple;
        break;
      case SectorNonlinearity::Kind::table:
        sector["kind"] = "table";
        sector["u"] = sf.sector.knots_u;
        sector["value"] = sf.sector.knots_v;
        break;
    }
    plant["sector"] = sector;
    json g;
    switch (sf.agent_nl.kind) {
      case AgentNonlinearity::Kind::zero:
        g["kind"] = "zero";
        break;
      case AgentNonlinearity::Kind::state_trig:
        g["kind"] = "state_trig";
        g["rate"] = sf.agent_nl.rate;
        break;
      case AgentNonlinearity::Kind::bounded_sine:
        g["kind"] = "bounded_sine";
        g["amplitude"] = sf.agent_nl.amplitude;
        g["frequency"] = sf.agent_nl.frequency;
        break;
    }
    plant["g"] = g;
  }
  root["plant"] = plant;

  json topo;
  topo["n"] = sf.graph.size();
  topo["adjacency"] = matrix_to_json(sf.graph.adjacency);
  json pinned = json::array();
  for (int i = 0; i < sf.pinning.size(); ++i) {
    if (sf.pinning.d[i]) pinned.push_back(i + 1);
  }
  topo["pinned"] = pinned;
  root["topology"] = topo;

  json constants;
  constants["eta"] = sf.constants.eta;
  constants["phi"] = sf.constants.phi;
  constants["mu"] = sf.constants.mu;
  constants["delta"] = sf.constants.delta;
  constants["s_bar"] = sf.constants.s_bar;
  root["constants"] = constants;

  root["protocol"] = protocol_name(sf.protocol);

  json gains;
  switch (sf.gains.mode) {
    case GainsSpec::Mode::synthesize:
      gains["synthesize"] = sf.gains.algorithm == Variant::theorem1 ? "algorithm1" : "algorithm2";
      break;
    case GainsSpec::Mode::file:
      gains["file"] = sf.gains.file;
      break;
    case GainsSpec::Mode::explicit_gains:
      if (sf.gains.E) gains["E"] = matrix_to_json(*sf.gains.E);
      if (sf.gains.Pi) gains["Pi"] = matrix_to_json(*sf.gains.Pi);
      if (sf.gains.K) gains["K"] = matrix_to_json(*sf.gains.K);
      break;
  }
  if (sf.gains.initial_E) gains["initial_E"] = matrix_to_json(*sf.gains.initial_E);
  root["gains"] = gains;

  json sim;
  sim["T"] = sf.T;
  sim["h"] = sf.h;
  sim["seed"] = sf.seed;
  if (sf.initial.random) {
    sim["initial_states"] = "random";
  } else {
    json init;
    init["s"] = vector_to_json(sf.initial.s0);
    json xs = json::array();
    for (const auto& v : sf.initial.x0) xs.push_back(vector_to_json(v));
    init["x"] = xs;
    json xh = json::array();
    for (const auto& v : sf.initial.xhat0) xh.push_back(vector_to_json(v));
    init["xhat"] = xh;
    sim["initial_states"] = init;
  }
  sim["clamp"] = sf.clamp;
  sim["positivity_tol"] = sf.positivity_tol;
  root["simulation"] = sim;

  json output;
  output["trajectory"] = sf.output.trajectory;
  output["metrics"] = sf.output.metrics;
  output["gains"] = sf.output.gains;
  output["report"] = sf.output.report;
  output["decimation"] = sf.output.decimation;
  root["output"] = output;

  if (sf.reference_alpha) root["reference_alpha"] = *sf.reference_alpha;
  return root.dump(2) + "\n";
}

namespace {

bool matrix_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool opt_matrix_equal(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || matrix_equal(*a, *b);
}

}  // namespace

bool scenario_equal(const ScenarioFile& a, const ScenarioFile& b) {
  if (!matrix_equal(a.plant.A, b.plant.A) || !matrix_equal(a.plant.H, b.plant.H) ||
      !matrix_equal(a.plant.B, b.plant.B) || !matrix_equal(a.plant.C, b.plant.C)) {
    return false;
  }
  if (a.plant.beta != b.plant.beta || a.plant.m_l != b.plant.m_l || a.plant.m_h != b.plant.m_h) {
    return false;
  }
  if (a.sector.kind != b.sector.kind || a.sector.gain != b.sector.gain ||
      a.sector.ripple != b.sector.ripple || a.sector.knots_u != b.sector.knots_u ||
      a.sector.knots_v != b.sector.knots_v) {
    return false;
  }
  if (a.agent_nl.kind != b.agent_nl.kind || a.agent_nl.rate != b.agent_nl.rate ||
      a.agent_nl.amplitude != b.agent_nl.amplitude ||
      a.agent_nl.frequency != b.agent_nl.frequency || a.agent_nl.beta != b.agent_nl.beta) {
    return false;
  }
  if (!matrix_equal(a.graph.adjacency, b.graph.adjacency) || a.pinning.d != b.pinning.d) {
    return false;
  }
  if (a.constants.eta != b.constants.eta || a.constants.phi != b.constants.phi ||
      a.constants.mu != b.constants.mu || a.constants.delta != b.constants.delta ||
      a.constants.s_bar != b.constants.s_bar) {
    return false;
  }
  if (a.protocol != b.protocol || a.gains.mode != b.gains.mode ||
      a.gains.algorithm != b.gains.algorithm || a.gains.file != b.gains.file) {
    return false;
  }
  if (!opt_matrix_equal(a.gains.E, b.gains.E) || !opt_matrix_equal(a.gains.Pi, b.gains.Pi) ||
      !opt_matrix_equal(a.gains.K, b.gains.K) ||
      !opt_matrix_equal(a.gains.initial_E, b.gains.initial_E)) {
    return false;
  }
  if (a.T != b.T || a.h != b.h || a.seed != b.seed || a.clamp != b.clamp ||
      a.positivity_tol != b.positivity_tol) {
    return false;
  }
  if (a.initial.random != b.initial.random) return false;
  if (!a.initial.random) {
    if (a.initial.s0 != b.initial.s0 || a.initial.x0.size() != b.initial.x0.size() ||
        a.initial.xhat0.size() != b.initial.xhat0.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.initial.x0.size(); ++i) {
      if (a.initial.x0[i] != b.initial.x0[i] || a.initial.xhat0[i] != b.initial.xhat0[i]) {
        return false;
      }
    }
  }
  if (a.output.trajectory != b.output.trajectory || a.output.metrics != b.output.metrics ||
      a.output.gains != b.output.gains || a.output.report != b.output.report ||
      a.output.decimation != b.output.decimation) {
    return false;
  }
  return a.reference_alpha == b.reference_alpha;
}

void write_gain_file(const std::string& path, const GainSet& gains) {
  json root;
  root["variant"] = variant_name(gains.variant);
  root["E"] = matrix_to_json(gains.E);
  root["Pi"] = matrix_to_json(gains.Pi);
  root["K"] = matrix_to_json(gains.K);
  if (gains.P.size() > 0) root["P"] = matrix_to_json(gains.P);
  if (gains.Sigma.size() > 0) root["Sigma"] = matrix_to_json(gains.Sigma);
  root["alpha"] = gains.alpha;
  if (gains.gamma.size() > 0) root["gamma"] = vector_to_json(gains.gamma);
  root["sweep_margin"] = gains.sweep_margin;
  root["outer_iterations"] = gains.outer_iterations;
  root["seed"] = gains.seed;
  json certs = json::array();
  for (const auto& cert : gains.certificates.certificates) {
    json c;
    c["name"] = cert.name;
    c["pass"] = cert.pass;
    c["worst"] = cert.worst;
    c["where"] = cert.worst_where;
    c["informational"] = cert.informational;
    certs.push_back(std::move(c));
  }
  root["certificates"] = certs;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("gain file: cannot write '" + path + "'");
  out << root.dump(2) << "\n";
}

GainSet read_gain_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("gain file: cannot open '" + path + "'");
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& err) {
    throw ParseError("gain file " + path + ": " + err.what());
  }
  check_keys(root, "gain file",
             {"variant", "E", "Pi", "K", "P", "Sigma", "alpha", "gamma", "sweep_margin",
              "outer_iterations", "seed", "certificates"});
  GainSet gains;
  std::string variant = get_string(root, "gain file", "variant");
  if (variant == "theorem1") {
    gains.variant = Variant::theorem1;
  } else if (variant == "theorem2") {
    gains.variant = Variant::theorem2;
  } else {
    fail("gain file.variant", "unknown variant '" + variant + "'");
  }
  gains.E = get_matrix(root, "gain file", "E");
  gains.Pi = get_matrix(root, "gain file", "Pi");
  gains.K = get_matrix(root, "gain file", "K");
  if (root.contains("P")) gains.P = parse_matrix(root["P"], "gain file.P");
  if (root.contains("Sigma")) gains.Sigma = parse_matrix(root["Sigma"], "gain file.Sigma");
  if (root.contains("alpha")) gains.alpha = root["alpha"].get<double>();
  if (root.contains("gamma")) gains.gamma = parse_vector(root["gamma"], "gain file.gamma");
  if (root.contains("sweep_margin")) gains.sweep_margin = root["sweep_margin"].get<double>();
  if (root.contains("outer_iterations")) gains.outer_iterations = root["outer_iterations"].get<int>();
  if (root.contains("seed")) gains.seed = root["seed"].get<std::uint64_t>();
  if (root.contains("certificates")) {
    for (const json& c : root["certificates"]) {
      Certificate cert;
      cert.name = c.value("name", "");
      cert.pass = c.value("pass", false);
      cert.worst = c.value("worst", 0.0);
      cert.worst_where = c.value("where", "");
      cert.informational = c.value("informational", false);
      gains.certificates.certificates.push_back(std::move(cert));
    }
  }
  return gains;
}

void resolve_initial_states(const ScenarioFile& sf, std::uint64_t seed, SimulationSettings* sim) {
  const int n = sf.graph.size();
  const int m = sf.plant.states();
  if (!sf.initial.random) {
    sim->s0 = sf.initial.s0;
    sim->x0 = sf.initial.x0;
    sim->xhat0 = sf.initial.xhat0;
    return;
  }
  // Bit-stable uniform draw on [0, 2]; the engine sequence is pinned by the
  // standard, and the mapping avoids distribution-dependent rounding.
  std::mt19937_64 rng(seed);
  auto draw = [&rng] { return 2.0 * ((rng() >> 11) * 0x1.0p-53); };
  auto draw_vec = [&](int size) {
    Vector v(size);
    for (int k = 0; k < size; ++k) v(k) = draw();
    return v;
  };
  sim->s0 = draw_vec(m);
  sim->x0.clear();
  sim->xhat0.clear();
  for (int i = 0; i < n; ++i) sim->x0.push_back(draw_vec(m));
  for (int i = 0; i < n; ++i) sim->xhat0.push_back(draw_vec(m));
}

Scenario make_scenario(const ScenarioFile& sf, const GainSet& gains, std::uint64_t seed) {
  Scenario sc;
  sc.plant = sf.plant;
  sc.graph = sf.graph;
  sc.pinning = sf.pinning;
  sc.sector = sf.sector;
  sc.agent_nl = sf.agent_nl;
  sc.protocol = sf.protocol;
  sc.constants = sf.constants;
  sc.gains = gains;
  sc.sim.T = sf.T;
  sc.sim.h = sf.h;
  sc.sim.seed = seed;
  sc.sim.clamp = sf.clamp;
  sc.sim.positivity_tol = sf.positivity_tol;
  resolve_initial_states(sf, seed, &sc.sim);
  validate_scenario(sc);
  return sc;
}

namespace {

void print_value(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int decimation) {
  if (decimation < 1) throw ParameterError("trajectory csv: decimation must be >= 1");
  const int n = static_cast<int>(traj.x.size());
  const int m = static_cast<int>(traj.s.rows());
  const int p = n > 0 ? static_cast<int>(traj.u[0].rows()) : 0;

  out << "t";
  for (int c = 1; c <= m; ++c) out << ",s_" << c;
  for (int i = 1; i <= n; ++i) {
    for (int c = 1; c <= m; ++c) out << ",x" << i << "_" << c;
    for (int c = 1; c <= m; ++c) out << ",xhat" << i << "_" << c;
  }
  for (int i = 1; i <= n; ++i) {
    for (int c = 1; c <= p; ++c) out << ",u" << i << "_" << c;
  }
  out << ",cons_err,est_err\n";

  for (int idx = 0; idx < traj.samples(); idx += decimation) {
    print_value(out, traj.times[idx]);
    for (int c = 0; c < m; ++c) {
      out << ',';
      print_value(out, traj.s(c, idx));
    }
    double cons = 0.0, est = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < m; ++c) {
        out << ',';
        print_value(out, traj.x[i](c, idx));
      }
      for (int c = 0; c < m; ++c) {
        out << ',';
        print_value(out, traj.xhat[i](c, idx));
      }
      cons = std::max(cons, (traj.x[i].col(idx) - traj.s.col(idx)).norm());
      est = std::max(est, (traj.x[i].col(idx) - traj.xhat[i].col(idx)).norm());
    }
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < p; ++c) {
        out << ',';
        print_value(out, traj.u[i](c, idx));
      }
    }
    out << ',';
    print_value(out, cons);
    out << ',';
    print_value(out, est);
    out << '\n';
  }
}

void write_metrics_csv(std::ostream& out, const MetricsSeries& series, int decimation) {
  if (decimation < 1) throw ParameterError("metrics csv: decimation must be >= 1");
  out << "t,est_err,cons_err,pairwise_err\n";
  for (std::size_t idx = 0; idx < series.t.size(); idx += decimation) {
    print_value(out, series.t[idx]);
    out << ',';
    print_value(out, series.est_err[idx]);
    out << ',';
    print_value(out, series.leader_err[idx]);
    out << ',';
    print_value(out, series.pairwise_err[idx]);
    out << '\n';
  }
}

std::string format_certificates(const PositivityReport& report) {
  std::ostringstream out;
  for (const auto& cert : report.certificates) {
    char worst[40];
    std::snprintf(worst, sizeof(worst), "%.9g", cert.worst);
    out << "CONDITION " << cert.name << ": " << (cert.pass ? "PASS" : "FAIL")
        << " worst=" << worst;
    if (!cert.worst_where.empty()) out << " at " << cert.worst_where;
    if (cert.informational) out << " [informational]";
    out << "\n";
  }
  return out.str();
}

}  // namespace pcons
