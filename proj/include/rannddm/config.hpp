#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rannddm/basis.hpp"
#include "rannddm/krylov.hpp"
#include "rannddm/reduction.hpp"
#include "rannddm/schwarz.hpp"

namespace rannddm {

/// One experiment description: problem, decomposition, basis, point sets,
/// truncation, solver, and run bookkeeping. Parsed from a flat sectioned
/// key=value file; unknown sections or keys are rejected.
struct RunConfig {
  // [problem]
  std::string problem = "example1";
  int n = 2;                 // example1 complexity
  int ref_resolution = 2001; // example2 reference grid

  // [decomposition]
  std::vector<int> counts = {4, 4};
  double delta = 2.0;

  // [basis]
  int m = 16;
  Activation activation = Activation::Tanh;
  std::uint64_t seed = 1000;

  // [points]
  std::vector<int> collocation = {40, 40};
  std::vector<int> test = {350, 350};

  // [pca]
  bool tau_on = false;
  double tau = 0.0;
  PcaMatrix pca_matrix = PcaMatrix::op_applied;

  // [solver]
  SolverKind solver = SolverKind::gmres;
  std::optional<SchwarzKind> preconditioner = SchwarzKind::AS;  // nullopt = none
  double rel_tol = 1e-5;
  int max_iter = 0;       // 0 = 10 * DoF
  int gmres_restart = 0;  // 0 = full

  // [run]
  int num_seeds = 10;
  std::string out_dir = "out";
  bool dump_diagnostics = false;

  bool override_caps = false;  // command-line only, not part of the file schema

  std::string tau_label() const {
    if (!tau_on) return "off";
    std::ostringstream os;
    os << tau;
    return os.str();
  }
  std::string precond_label() const { return preconditioner ? to_string(*preconditioner) : "none"; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  std::string cleaned = value;
  for (char& ch : cleaned)
    if (ch == ',') ch = ' ';
  std::istringstream is(cleaned);
  int v = 0;
  while (is >> v) out.push_back(v);
  if (out.empty()) throw std::invalid_argument("config: empty integer list for '" + key + "'");
  return out;
}

inline int parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + value + "'");
  }
}

inline bool parse_on_off(const std::string& value, const std::string& key) {
  if (value == "on" || value == "true") return true;
  if (value == "off" || value == "false") return false;
  throw std::invalid_argument("config: '" + key + "' expects on/off, got '" + value + "'");
}

}  // namespace detail

inline SolverKind parse_solver(const std::string& s) {
  if (s == "qr_direct") return SolverKind::qr_direct;
  if (s == "cg") return SolverKind::cg;
  if (s == "cgs") return SolverKind::cgs;
  if (s == "bicg") return SolverKind::bicg;
  if (s == "gmres") return SolverKind::gmres;
  throw std::invalid_argument("config: unknown solver '" + s + "'");
}

inline std::optional<SchwarzKind> parse_preconditioner(const std::string& s) {
  if (s == "none") return std::nullopt;
  if (s == "AS") return SchwarzKind::AS;
  if (s == "SAS") return SchwarzKind::SAS;
  if (s == "RAS") return SchwarzKind::RAS;
  throw std::invalid_argument("config: unknown preconditioner '" + s + "'");
}

inline RunConfig parse_config_text(const std::string& text) {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"problem", {"name", "n", "ref_resolution"}},
      {"decomposition", {"counts", "delta"}},
      {"basis", {"m", "activation", "seed"}},
      {"points", {"collocation", "test"}},
      {"pca", {"tau", "matrix"}},
      {"solver", {"method", "preconditioner", "rel_tol", "max_iter", "gmres_restart"}},
      {"run", {"num_seeds", "out_dir", "dump_diagnostics"}},
  };

  RunConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (schema.find(section) == schema.end())
        throw std::invalid_argument("config: unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw std::invalid_argument("config: key '" + key + "' outside any section");
    if (schema.at(section).find(key) == schema.at(section).end())
      throw std::invalid_argument("config: unknown key '" + key + "' in section [" + section + "]");

    if (section == "problem") {
      if (key == "name") cfg.problem = value;
      else if (key == "n") cfg.n = detail::parse_int(value, key);
      else cfg.ref_resolution = detail::parse_int(value, key);
    } else if (section == "decomposition") {
      if (key == "counts") cfg.counts = detail::parse_int_list(value, key);
      else cfg.delta = detail::parse_double(value, key);
    } else if (section == "basis") {
      if (key == "m") cfg.m = detail::parse_int(value, key);
      else if (key == "activation") {
        if (value == "tanh") cfg.activation = Activation::Tanh;
        else if (value == "sin") cfg.activation = Activation::Sin;
        else throw std::invalid_argument("config: activation must be tanh or sin");
      } else cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (section == "points") {
      if (key == "collocation") cfg.collocation = detail::parse_int_list(value, key);
      else cfg.test = detail::parse_int_list(value, key);
    } else if (section == "pca") {
      if (key == "matrix") {
        if (value == "operator") cfg.pca_matrix = PcaMatrix::op_applied;
        else if (value == "psi") cfg.pca_matrix = PcaMatrix::psi;
        else throw std::invalid_argument("config: pca matrix must be operator or psi");
      } else if (value == "off") {
        cfg.tau_on = false;
        cfg.tau = 0.0;
      } else {
        cfg.tau_on = true;
        cfg.tau = detail::parse_double(value, key);
        if (cfg.tau < 0.0) throw std::invalid_argument("config: tau must be >= 0 or off");
      }
    } else if (section == "solver") {
      if (key == "method") cfg.solver = parse_solver(value);
      else if (key == "preconditioner") cfg.preconditioner = parse_preconditioner(value);
      else if (key == "rel_tol") cfg.rel_tol = detail::parse_double(value, key);
      else if (key == "max_iter") cfg.max_iter = detail::parse_int(value, key);
      else cfg.gmres_restart = detail::parse_int(value, key);
    } else if (section == "run") {
      if (key == "num_seeds") cfg.num_seeds = detail::parse_int(value, key);
      else if (key == "out_dir") cfg.out_dir = value;
      else cfg.dump_diagnostics = detail::parse_on_off(value, key);
    }
  }

  if (cfg.problem != "example1" && cfg.problem != "example2" && cfg.problem != "example3")
    throw std::invalid_argument("config: unknown problem '" + cfg.problem + "'");
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("config: rel_tol must be positive");
  if (cfg.num_seeds < 1) throw std::invalid_argument("config: num_seeds must be >= 1");
  if (cfg.m < 1) throw std::invalid_argument("config: m must be >= 1");
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Canonical echo of a config with all defaults resolved; parseable by
/// parse_config_text.
inline std::string config_echo(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "[problem]\n"
     << "name = " << cfg.problem << "\n"
     << "n = " << cfg.n << "\n"
     << "ref_resolution = " << cfg.ref_resolution << "\n\n";
  os << "[decomposition]\ncounts =";
  for (int c : cfg.counts) os << " " << c;
  os << "\ndelta = " << cfg.delta << "\n\n";
  os << "[basis]\nm = " << cfg.m << "\nactivation = " << (cfg.activation == Activation::Tanh ? "tanh" : "sin")
     << "\nseed = " << cfg.seed << "\n\n";
  os << "[points]\ncollocation =";
  for (int c : cfg.collocation) os << " " << c;
  os << "\ntest =";
  for (int c : cfg.test) os << " " << c;
  os << "\n\n";
  os << "[pca]\ntau = " << cfg.tau_label()
     << "\nmatrix = " << (cfg.pca_matrix == PcaMatrix::op_applied ? "operator" : "psi") << "\n\n";
  os << "[solver]\nmethod = " << to_string(cfg.solver) << "\npreconditioner = " << cfg.precond_label()
     << "\nrel_tol = " << cfg.rel_tol << "\nmax_iter = " << cfg.max_iter
     << "\ngmres_restart = " << cfg.gmres_restart << "\n\n";
  os << "[run]\nnum_seeds = " << cfg.num_seeds << "\nout_dir = " << cfg.out_dir
     << "\ndump_diagnostics = " << (cfg.dump_diagnostics ? "on" : "off") << "\n";
  return os.str();
}

}  // namespace rannddm
