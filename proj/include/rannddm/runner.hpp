#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rannddm/assembly.hpp"
#include "rannddm/basis.hpp"
#include "rannddm/config.hpp"
#include "rannddm/geometry.hpp"
#include "rannddm/krylov.hpp"
#include "rannddm/problems.hpp"
#include "rannddm/reduction.hpp"
#include "rannddm/schwarz.hpp"

namespace rannddm {

/// One fully initialized experiment for a single seed: problem, geometry,
/// per-subdomain bases and truncations, and the collocation grid.
struct Instance {
  ProblemSpec prob;
  CartesianDecomposition dec;
  std::vector<RandomBasis> bases;
  std::vector<ReducedLocalBasis> reduced;
  PointSet collocation;
  std::vector<int> column_offsets;
  int p = 0;

  int dof() const { return p * prob.components; }
};

inline Instance build_instance(const RunConfig& cfg, std::uint64_t seed) {
  Instance inst;
  inst.prob = make_problem(cfg.problem, cfg.n);
  const int d = inst.prob.domain.dim;
  if (static_cast<int>(cfg.counts.size()) != d)
    throw std::invalid_argument("decomposition counts have dimension " + std::to_string(cfg.counts.size()) +
                                " but the problem is " + std::to_string(d) + "-dimensional");
  if (static_cast<int>(cfg.collocation.size()) != d || static_cast<int>(cfg.test.size()) != d)
    throw std::invalid_argument("point resolutions must match the problem dimension");

  inst.dec = build_decomposition(inst.prob.domain, cfg.counts, cfg.delta);
  inst.collocation = uniform_grid(inst.prob.domain, cfg.collocation, PointKind::collocation);

  const WindowSet ws = make_window_set(inst.dec);
  for (int j = 0; j < inst.dec.size(); ++j) {
    inst.bases.push_back(make_random_basis(subdomain_seed(seed, j), cfg.m, d, cfg.activation));
    if (cfg.tau_on) {
      const SampleMatrix sm =
          cfg.pca_matrix == PcaMatrix::op_applied
              ? build_operator_sample_matrix(inst.prob.op, ws, j, inst.bases.back(), inst.prob.constraint,
                                             inst.collocation)
              : build_sample_matrix(ws, j, inst.bases.back(), inst.collocation);
      inst.reduced.push_back(truncate(sm, cfg.tau));
    } else {
      inst.reduced.push_back(identity_reduction(cfg.m));
    }
  }
  inst.column_offsets = make_column_offsets(inst.reduced);
  inst.p = inst.column_offsets.back();
  return inst;
}

inline BlockSystem assemble_instance(const Instance& inst) {
  const WindowSet ws = make_window_set(inst.dec);
  return assemble(inst.prob.op, inst.prob.rhs, inst.dec, ws, inst.bases, inst.reduced, inst.prob.constraint,
                  inst.collocation);
}

/// Assembled system with its columns normalized to unit collocation norm.
/// Equilibration leaves the least-squares problem unchanged but removes the
/// artificial spread the raw column scales add to the normal equations;
/// solutions of the scaled system are mapped back by W = y / scales. It is
/// part of the Schwarz-preconditioned solve path; unpreconditioned solves
/// see the raw system.
struct EquilibratedSystem {
  BlockSystem sys;
  Eigen::VectorXd scales;
};

inline EquilibratedSystem assemble_equilibrated(const Instance& inst, bool equilibrate = true) {
  EquilibratedSystem out;
  out.sys = assemble_instance(inst);
  if (!equilibrate) {
    out.scales = Eigen::VectorXd::Ones(out.sys.p);
    return out;
  }
  out.scales = column_norms(out.sys);
  for (Eigen::Index c = 0; c < out.scales.size(); ++c)
    if (out.scales(c) == 0.0) out.scales(c) = 1.0;
  scale_columns(out.sys, out.scales);
  return out;
}

/// Evaluates the ansatz sum_j W_j . (L omega_j V_j^T Phi_j) + G at each point;
/// one column per solution component.
inline Eigen::MatrixXd evaluate_solution(const Instance& inst, const Eigen::MatrixXd& W, const PointSet& pts) {
  const int C = inst.prob.components;
  if (W.rows() != inst.p || W.cols() != C) throw std::invalid_argument("evaluate_solution: W has wrong shape");
  const WindowSet ws = make_window_set(inst.dec);
  Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(pts.size(), C);
  const Eigen::Index npts = pts.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (Eigen::Index i = 0; i < npts; ++i) {
    const Point& x = pts.points[static_cast<std::size_t>(i)];
    const double Lv = inst.prob.constraint.L(x).v;
    Eigen::VectorXd local;
    for (int j : covering_subdomains(inst.dec, x)) {
      const auto sj = static_cast<std::size_t>(j);
      reduced_localized_values(ws, j, inst.bases[sj], inst.reduced[sj], Lv, x, local);
      const int off = inst.column_offsets[sj];
      for (int c = 0; c < C; ++c) vals(i, c) += W.col(c).segment(off, inst.reduced[sj].p).dot(local);
    }
    for (int c = 0; c < C; ++c) vals(i, c) += inst.prob.constraint.G[static_cast<std::size_t>(c)](x).v;
  }
  return vals;
}

/// Exact (or reference) solution values at the test points.
inline Eigen::MatrixXd exact_values(const ProblemSpec& prob, const PointSet& pts, const ReferenceGrid* ref) {
  Eigen::MatrixXd vals(pts.size(), prob.components);
  if (prob.has_exact) {
    for (int i = 0; i < pts.size(); ++i)
      for (int c = 0; c < prob.components; ++c)
        vals(i, c) = prob.exact[static_cast<std::size_t>(c)].value(pts.points[static_cast<std::size_t>(i)]);
    return vals;
  }
  if (ref == nullptr) throw std::invalid_argument("problem has no closed form; a reference grid is required");
  for (int i = 0; i < pts.size(); ++i) {
    const Point& x = pts.points[static_cast<std::size_t>(i)];
    vals(i, 0) = ref->at(x[0], x[1]);
  }
  return vals;
}

/// One summary.csv row.
struct RunSummary {
  std::uint64_t seed = 0;
  std::string problem;
  int J = 0, DoF = 0, N = 0;
  std::string solver, precond, tau;
  int iterations = 0;
  bool converged = false;
  double e_l2 = 0.0, e_l1n = 0.0;
  double t_assemble = 0.0, t_precond = 0.0, t_solve = 0.0;
};

inline constexpr const char* kSummaryHeader =
    "seed,problem,J,DoF,N,solver,precond,tau,iter,converged,e_l2,e_l1n,t_assemble,t_precond,t_solve";

inline std::string summary_row(const RunSummary& s) {
  std::ostringstream os;
  os.precision(10);
  os << s.seed << "," << s.problem << "," << s.J << "," << s.DoF << "," << s.N << "," << s.solver << "," << s.precond
     << "," << s.tau << "," << s.iterations << "," << (s.converged ? 1 : 0) << "," << s.e_l2 << "," << s.e_l1n << ","
     << s.t_assemble << "," << s.t_precond << "," << s.t_solve;
  return os.str();
}

/// Everything produced by one seed's pipeline, kept for diagnostics.
struct SeedResult {
  RunSummary summary;
  std::vector<SolveReport> reports;  // one per component (empty for qr_direct)
  std::shared_ptr<Instance> instance;
};

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Runs decompose -> init -> PCA -> assemble -> precondition -> solve ->
/// evaluate for one seed. The reference grid is only consulted for problems
/// without a closed-form solution.
inline SeedResult run_single(const RunConfig& cfg, std::uint64_t seed, const ReferenceGrid* ref = nullptr) {
  SeedResult out;
  auto t0 = std::chrono::steady_clock::now();
  out.instance = std::make_shared<Instance>(build_instance(cfg, seed));
  Instance& inst = *out.instance;
  const EquilibratedSystem eq = assemble_equilibrated(inst, cfg.preconditioner.has_value());
  const BlockSystem& sys = eq.sys;
  const double t_assemble = detail::elapsed(t0);

  const int C = inst.prob.components;
  Eigen::MatrixXd W(inst.p, C);
  double t_precond = 0.0, t_solve = 0.0;
  int iterations = 0;
  bool converged = true;

  if (cfg.solver == SolverKind::qr_direct) {
    t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd Hd = densify(sys);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Hd);
    W = qr.solve(sys.F);
    t_solve = detail::elapsed(t0);
  } else {
    std::optional<SchwarzPreconditioner> pre;
    if (cfg.preconditioner) {
      t0 = std::chrono::steady_clock::now();
      const NormalBlocks nb = normal_blocks(sys, inst.dec.neighbor_sets);
      pre = build_preconditioner(*cfg.preconditioner, nb, build_index_sets(inst.dec, inst.column_offsets));
      t_precond = detail::elapsed(t0);
    }

    LinearMap A{inst.p,
                [&sys](const Eigen::VectorXd& w) { return matvec_transpose(sys, matvec(sys, w)); },
                nullptr, false};
    LinearMap M = pre ? LinearMap{inst.p, [&pre](const Eigen::VectorXd& v) { return apply(*pre, v); },
                                  [&pre](const Eigen::VectorXd& v) { return apply_transpose(*pre, v); }, false}
                      : identity_map(inst.p);

    SolveConfig scfg{cfg.solver, cfg.rel_tol, cfg.max_iter, cfg.gmres_restart};
    t0 = std::chrono::steady_clock::now();
    for (int c = 0; c < C; ++c) {
      const Eigen::VectorXd b = matvec_transpose(sys, sys.F.col(c));
      SolveReport rep = solve_with(scfg, A, M, b);
      W.col(c) = rep.W;
      iterations = std::max(iterations, rep.iterations);
      converged = converged && rep.converged;
      out.reports.push_back(std::move(rep));
    }
    t_solve = detail::elapsed(t0);
  }
  W.array().colwise() /= eq.scales.array();  // back to unscaled coefficients

  const PointSet test = uniform_grid(inst.prob.domain, cfg.test, PointKind::test);
  const Eigen::MatrixXd approx = evaluate_solution(inst, W, test);
  const Eigen::MatrixXd exact = exact_values(inst.prob, test, ref);
  const ErrorReport err = compute_errors(approx, exact);

  RunSummary& s = out.summary;
  s.seed = seed;
  s.problem = cfg.problem;
  s.J = inst.dec.size();
  s.DoF = inst.dof();
  s.N = sys.N;
  s.solver = to_string(cfg.solver);
  s.precond = cfg.solver == SolverKind::qr_direct ? "none" : cfg.precond_label();
  s.tau = cfg.tau_label();
  s.iterations = iterations;
  s.converged = cfg.solver == SolverKind::qr_direct ? true : converged;
  s.e_l2 = err.rel_l2;
  s.e_l1n = err.normalized_l1;
  s.t_assemble = t_assemble;
  s.t_precond = t_precond;
  s.t_solve = t_solve;
  return out;
}

inline void write_residuals_csv(const std::string& path, const SolveReport& rep) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "iter,preconditioned_residual,true_residual\n";
  os.precision(12);
  for (std::size_t i = 0; i < rep.residual_history.size(); ++i)
    os << i << "," << rep.residual_history[i] << "," << rep.true_residual_history[i] << "\n";
}

/// Builds the reference grid when the configured problem needs one.
inline std::shared_ptr<ReferenceGrid> maybe_reference(const RunConfig& cfg) {
  if (cfg.problem != "example2") return nullptr;
  return std::make_shared<ReferenceGrid>(reference_example2(cfg.ref_resolution));
}

/// Full experiment: one pipeline per seed (seed, seed+1, ...), per-seed rows
/// in summary.csv, residual history of the first seed in residuals.csv, and
/// median/mean aggregates in aggregate.csv. Returns the per-seed summaries.
inline std::vector<RunSummary> run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(cfg.out_dir + "/config_echo.ini");
    echo << config_echo(cfg);
  }
  const auto ref = maybe_reference(cfg);

  std::vector<RunSummary> rows;
  std::ofstream summary(cfg.out_dir + "/summary.csv");
  summary << kSummaryHeader << "\n";
  for (int k = 0; k < cfg.num_seeds; ++k) {
    SeedResult res = run_single(cfg, cfg.seed + static_cast<std::uint64_t>(k), ref.get());
    summary << summary_row(res.summary) << "\n";
    rows.push_back(res.summary);
    if (k == 0 && !res.reports.empty()) write_residuals_csv(cfg.out_dir + "/residuals.csv", res.reports.front());
    if (k == 0 && cfg.dump_diagnostics) {
      write_singular_values_csv(cfg.out_dir + "/singular_values.csv", res.instance->reduced);
    }
  }

  std::vector<double> iters, el2, el1;
  for (const auto& r : rows) {
    iters.push_back(r.iterations);
    el2.push_back(r.e_l2);
    el1.push_back(r.e_l1n);
  }
  std::ofstream agg(cfg.out_dir + "/aggregate.csv");
  agg << "metric,median,mean\n";
  agg.precision(10);
  agg << "iter," << detail::median(iters) << "," << detail::mean(iters) << "\n";
  agg << "e_l2," << detail::median(el2) << "," << detail::mean(el2) << "\n";
  agg << "e_l1n," << detail::median(el1) << "," << detail::mean(el1) << "\n";
  return rows;
}

inline void write_spectrum_csv(const std::string& path, std::vector<std::complex<double>> eigs) {
  std::sort(eigs.begin(), eigs.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) { return a.real() < b.real(); });
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "index,real,imag\n";
  os.precision(12);
  for (std::size_t i = 0; i < eigs.size(); ++i) os << i << "," << eigs[i].real() << "," << eigs[i].imag() << "\n";
}

/// Dense spectra of H^T H and M^{-1} H^T H for the first seed; writes
/// spectrum_normal.csv and spectrum_preconditioned.csv.
inline void spectrum_cmd(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const int cap = cfg.override_caps ? 1 << 20 : kDenseSpectrumCap;

  const Instance inst = build_instance(cfg, cfg.seed);
  const EquilibratedSystem eq = assemble_equilibrated(inst);
  const NormalBlocks nb = normal_blocks(eq.sys, inst.dec.neighbor_sets);
  const Eigen::MatrixXd AtA = densify(nb);
  check_dense_cap(AtA.rows(), cap);
  write_spectrum_csv(cfg.out_dir + "/spectrum_normal.csv", spectrum(AtA, cap));

  const SchwarzKind kind = cfg.preconditioner.value_or(SchwarzKind::AS);
  const SchwarzPreconditioner pre =
      build_preconditioner(kind, nb, build_index_sets(inst.dec, inst.column_offsets));
  Eigen::MatrixXd MA(inst.p, inst.p);
  for (int c = 0; c < inst.p; ++c) MA.col(c) = apply(pre, AtA.col(c));
  write_spectrum_csv(cfg.out_dir + "/spectrum_preconditioned.csv", spectrum(MA, cap));
}

struct TauSweepRow {
  double tau = 0.0;
  double dof = 0.0;
  double cond_normal = 0.0;
  double cond_precond = 0.0;
  double iterations = 0.0;
  double e_l2 = 0.0;
};

/// Median-over-seeds table of DoF, condition numbers, iterations, and error
/// across a threshold grid; writes sweep_tau.csv.
inline std::vector<TauSweepRow> sweep_tau(const RunConfig& base, const std::vector<double>& taus) {
  namespace fs = std::filesystem;
  fs::create_directories(base.out_dir);
  const int cap = base.override_caps ? 1 << 20 : kDenseSpectrumCap;
  const auto ref = maybe_reference(base);

  std::vector<TauSweepRow> rows;
  for (double tau : taus) {
    RunConfig cfg = base;
    cfg.tau_on = true;
    cfg.tau = tau;
    std::vector<double> dof, cn, cp, iters, el2;
    for (int k = 0; k < cfg.num_seeds; ++k) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
      SeedResult res = run_single(cfg, seed, ref.get());
      dof.push_back(res.summary.DoF);
      iters.push_back(res.summary.iterations);
      el2.push_back(res.summary.e_l2);

      const EquilibratedSystem eq = assemble_equilibrated(*res.instance);
      const NormalBlocks nb = normal_blocks(eq.sys, res.instance->dec.neighbor_sets);
      const Eigen::MatrixXd AtA = densify(nb);
      check_dense_cap(AtA.rows(), cap);
      cn.push_back(condition_number(AtA, cap));
      const SchwarzKind kind = cfg.preconditioner.value_or(SchwarzKind::AS);
      const SchwarzPreconditioner pre =
          build_preconditioner(kind, nb, build_index_sets(res.instance->dec, res.instance->column_offsets));
      Eigen::MatrixXd MA(res.instance->p, res.instance->p);
      for (int c = 0; c < res.instance->p; ++c) MA.col(c) = apply(pre, AtA.col(c));
      cp.push_back(condition_number(MA, cap));
    }
    rows.push_back({tau, detail::median(dof), detail::median(cn), detail::median(cp), detail::median(iters),
                    detail::median(el2)});
  }

  std::ofstream os(base.out_dir + "/sweep_tau.csv");
  os << "tau,DoF,cond_HtH,cond_precond,iter,e_l2\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.tau << "," << r.dof << "," << r.cond_normal << "," << r.cond_precond << "," << r.iterations << ","
       << r.e_l2 << "\n";
  return rows;
}

struct ScalingRow {
  int n = 0;
  int J = 0;
  std::string precond;
  double dof = 0.0, iterations = 0.0, e_l1n = 0.0;
  int N = 0;
  double converged_fraction = 0.0;
  double t_assemble = 0.0, t_precond = 0.0, t_solve = 0.0;
};

/// Weak-scaling schedule: per complexity n, J = 2^(n-1) x 2^(n-1) subdomains
/// and (5 2^n)^2 collocation points, m = 32, tau = 1e-3, following the
/// reference table. Preconditioned rows use the configured preconditioner and
/// seed count; unpreconditioned comparison rows run a restarted GMRES on at
/// most 3 seeds (they exist to demonstrate non-convergence).
inline std::vector<ScalingRow> scaling_cmd(const RunConfig& base, const std::vector<int>& ns) {
  namespace fs = std::filesystem;
  fs::create_directories(base.out_dir);
  for (int n : ns) {
    if (n < 2) throw std::invalid_argument("scaling: n must be >= 2");
    if (n > 4 && !base.override_caps)
      throw std::invalid_argument("scaling: n > 4 exceeds the desk-scale cap; pass --override-caps");
  }

  std::vector<ScalingRow> rows;
  for (int n : ns) {
    const int l = 1 << (n - 1);
    const int npts = 5 * (1 << n);
    RunConfig cfg = base;
    cfg.problem = "example1";
    cfg.n = n;
    cfg.counts = {l, l};
    cfg.collocation = {npts, npts};
    cfg.m = 32;
    cfg.tau_on = true;
    cfg.tau = 1e-3;

    for (int variant = 0; variant < 2; ++variant) {
      RunConfig vc = cfg;
      int seeds = cfg.num_seeds;
      if (variant == 1) {
        vc.preconditioner = std::nullopt;
        if (vc.solver == SolverKind::gmres && vc.gmres_restart == 0) vc.gmres_restart = 30;
        seeds = std::min(seeds, 3);
      }
      std::vector<double> dof, iters, el1, ta, tp, tsv;
      int converged_count = 0, N = 0, J = 0;
      for (int k = 0; k < seeds; ++k) {
        SeedResult res = run_single(vc, vc.seed + static_cast<std::uint64_t>(k), nullptr);
        dof.push_back(res.summary.DoF);
        iters.push_back(res.summary.iterations);
        el1.push_back(res.summary.e_l1n);
        ta.push_back(res.summary.t_assemble);
        tp.push_back(res.summary.t_precond);
        tsv.push_back(res.summary.t_solve);
        converged_count += res.summary.converged ? 1 : 0;
        N = res.summary.N;
        J = res.summary.J;
      }
      rows.push_back({n, J, vc.precond_label(), detail::median(dof), detail::median(iters), detail::median(el1), N,
                      static_cast<double>(converged_count) / seeds, detail::median(ta), detail::median(tp),
                      detail::median(tsv)});
    }
  }

  std::ofstream os(base.out_dir + "/scaling.csv");
  os << "n,J,precond,DoF,N,iter,converged_fraction,e_l1n,t_assemble,t_precond,t_solve\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.n << "," << r.J << "," << r.precond << "," << r.dof << "," << r.N << "," << r.iterations << ","
       << r.converged_fraction << "," << r.e_l1n << "," << r.t_assemble << "," << r.t_precond << "," << r.t_solve
       << "\n";
  return rows;
}

}  // namespace rannddm
