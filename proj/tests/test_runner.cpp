#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rannddm/runner.hpp"

using namespace rannddm;

namespace {

std::string small_config(const std::string& out_dir) {
  return R"([problem]
name = example1
n = 1

[decomposition]
counts = 2 2
delta = 2.0

[basis]
m = 8
activation = tanh
seed = 77

[points]
collocation = 12 12
test = 40 40

[pca]
tau = off

[solver]
method = gmres
preconditioner = AS
rel_tol = 1e-5

[run]
num_seeds = 2
out_dir = )" + out_dir + "\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config parsing validates the schema") {
  const RunConfig cfg = parse_config_text(small_config("out"));
  CHECK(cfg.problem == "example1");
  CHECK(cfg.n == 1);
  CHECK(cfg.counts == std::vector<int>{2, 2});
  CHECK(cfg.m == 8);
  CHECK(cfg.seed == 77);
  CHECK_FALSE(cfg.tau_on);
  CHECK(cfg.solver == SolverKind::gmres);
  CHECK(cfg.preconditioner == SchwarzKind::AS);
  CHECK(cfg.num_seeds == 2);

  CHECK_THROWS_WITH(parse_config_text("[bogus]\nx = 1\n"), Catch::Matchers::ContainsSubstring("unknown section"));
  CHECK_THROWS_WITH(parse_config_text("[problem]\nnombre = example1\n"),
                    Catch::Matchers::ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(parse_config_text("[problem]\nname = example9\n"),
                    Catch::Matchers::ContainsSubstring("unknown problem"));
  CHECK_THROWS_AS(parse_config_text("[solver]\nmethod = simplex\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("[pca]\ntau = -1\n"), std::invalid_argument);

  // Echo round-trips through the parser.
  const RunConfig again = parse_config_text(config_echo(cfg));
  CHECK(again.m == cfg.m);
  CHECK(again.counts == cfg.counts);
  CHECK(again.tau_label() == cfg.tau_label());
  CHECK(config_echo(again) == config_echo(cfg));
}

TEST_CASE("pca matrix selection is parsed") {
  RunConfig cfg = parse_config_text("[pca]\ntau = 1e-3\nmatrix = psi\n");
  CHECK(cfg.tau_on);
  CHECK(cfg.pca_matrix == PcaMatrix::psi);
  cfg = parse_config_text("[pca]\nmatrix = operator\n");
  CHECK(cfg.pca_matrix == PcaMatrix::op_applied);
  CHECK_THROWS_AS(parse_config_text("[pca]\nmatrix = fourier\n"), std::invalid_argument);
}

TEST_CASE("run writes the pinned summary schema and is deterministic") {
  namespace fs = std::filesystem;
  const std::string dir = "runner_out";
  fs::remove_all(dir);
  const RunConfig cfg = parse_config_text(small_config(dir));
  const auto rows = run(cfg);
  REQUIRE(rows.size() == 2);

  const std::string summary = slurp(dir + "/summary.csv");
  CHECK(summary.rfind("seed,problem,J,DoF,N,solver,precond,tau,iter,converged,e_l2,e_l1n,t_assemble,t_precond,"
                      "t_solve\n", 0) == 0);
  CHECK(fs::exists(dir + "/config_echo.ini"));
  CHECK(fs::exists(dir + "/residuals.csv"));
  CHECK(fs::exists(dir + "/aggregate.csv"));

  const std::string residuals = slurp(dir + "/residuals.csv");
  CHECK(residuals.rfind("iter,preconditioned_residual,true_residual\n", 0) == 0);

  // Same config and seed give identical rows (timings excluded).
  const auto rows2 = run(cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].seed == rows2[i].seed);
    CHECK(rows[i].DoF == rows2[i].DoF);
    CHECK(rows[i].iterations == rows2[i].iterations);
    CHECK(rows[i].e_l2 == rows2[i].e_l2);
    CHECK(rows[i].e_l1n == rows2[i].e_l1n);
  }

  for (const auto& r : rows) {
    CHECK(r.DoF <= 4 * 8);
    CHECK(r.N == 144);
    CHECK(r.t_assemble >= 0.0);
    CHECK(r.converged);
  }
}

TEST_CASE("equilibrated qr and iterative paths agree") {
  RunConfig cfg = parse_config_text(small_config("runner_out_qr"));
  cfg.num_seeds = 1;
  const auto ref = maybe_reference(cfg);
  const SeedResult it = run_single(cfg, cfg.seed, ref.get());
  cfg.solver = SolverKind::qr_direct;
  const SeedResult qr = run_single(cfg, cfg.seed, ref.get());
  CHECK(qr.summary.iterations == 0);
  CHECK(qr.summary.e_l2 <= 3.0 * it.summary.e_l2);
  CHECK(it.summary.e_l2 <= 3.0 * qr.summary.e_l2);
}

TEST_CASE("spectrum command writes sorted spectra") {
  namespace fs = std::filesystem;
  RunConfig cfg = parse_config_text(small_config("runner_out_spec"));
  fs::remove_all(cfg.out_dir);
  spectrum_cmd(cfg);
  const std::string normal = slurp(cfg.out_dir + "/spectrum_normal.csv");
  CHECK(normal.rfind("index,real,imag\n", 0) == 0);

  std::ifstream in(cfg.out_dir + "/spectrum_preconditioned.csv");
  std::string line;
  std::getline(in, line);
  double prev = -1e300;
  int count = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.rfind(',');
    const double re = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    CHECK(re >= prev);
    prev = re;
    ++count;
  }
  CHECK(count == 32);  // p = 4 subdomains x m = 8
}

TEST_CASE("tau sweep emits monotone DoF") {
  RunConfig cfg = parse_config_text(small_config("runner_out_sweep"));
  cfg.m = 12;
  cfg.num_seeds = 2;
  const auto rows = sweep_tau(cfg, {1e-4, 1e-2, 1e-1});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].dof >= rows[1].dof);
  CHECK(rows[1].dof >= rows[2].dof);
  CHECK(std::filesystem::exists(cfg.out_dir + "/sweep_tau.csv"));
}

TEST_CASE("scaling command runs the schedule") {
  RunConfig cfg = parse_config_text(small_config("runner_out_scaling"));
  cfg.num_seeds = 1;
  const auto rows = scaling_cmd(cfg, {2});
  REQUIRE(rows.size() == 2);  // configured preconditioner + none
  CHECK(rows[0].n == 2);
  CHECK(rows[0].J == 4);
  CHECK(rows[0].precond == "AS");
  CHECK(rows[1].precond == "none");
  CHECK(rows[0].N == 400);
  CHECK_THROWS_WITH(scaling_cmd(cfg, {5}), Catch::Matchers::ContainsSubstring("override-caps"));
}

TEST_CASE("mismatched dimensions are rejected") {
  RunConfig cfg = parse_config_text(small_config("runner_out_bad"));
  cfg.problem = "example3";  // 3-D problem with 2-D counts
  CHECK_THROWS_WITH(build_instance(cfg, 1), Catch::Matchers::ContainsSubstring("dimension"));
}
