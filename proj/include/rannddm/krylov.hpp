#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rannddm {

enum class SolverKind { qr_direct, cg, cgs, bicg, gmres };

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::qr_direct: return "qr_direct";
    case SolverKind::cg: return "cg";
    case SolverKind::cgs: return "cgs";
    case SolverKind::bicg: return "bicg";
    case SolverKind::gmres: return "gmres";
  }
  return "?";
}

struct SolveConfig {
  SolverKind solver = SolverKind::gmres;
  double rel_tol = 1e-5;
  int max_iter = 0;       // 0: use 10 * p
  int gmres_restart = 0;  // 0: full (non-restarted) GMRES
};

/// Full GMRES refuses to allocate more basis vectors than this; configure a
/// restart for larger runs.
inline constexpr int kMaxFullGmresBasis = 4096;

/// A linear map on R^p given by its action. The transpose action defaults to
/// the forward action, which is exact for symmetric maps.
struct LinearMap {
  int size = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_transpose;
  bool is_identity = false;

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const { return apply(v); }
  Eigen::VectorXd transpose_apply(const Eigen::VectorXd& v) const {
    return apply_transpose ? apply_transpose(v) : apply(v);
  }
};

inline LinearMap identity_map(int n) {
  LinearMap m{n, [](const Eigen::VectorXd& v) { return v; }, nullptr, true};
  return m;
}

inline LinearMap dense_map(const Eigen::MatrixXd& A) {
  return {static_cast<int>(A.cols()), [A](const Eigen::VectorXd& v) { return Eigen::VectorXd(A * v); },
          [A](const Eigen::VectorXd& v) { return Eigen::VectorXd(A.transpose() * v); }, false};
}

struct SolveReport {
  Eigen::VectorXd W;
  int iterations = 0;
  std::vector<double> residual_history;       // preconditioned, relative; length iterations+1
  std::vector<double> true_residual_history;  // ||Ax-b|| / ||b||, same length
  bool converged = false;
  bool breakdown = false;
  double setup_seconds = 0.0;  // filled by the caller (preconditioner build)
  double solve_seconds = 0.0;
  double final_preconditioned_residual = 0.0;
};

namespace detail {

inline int effective_max_iter(const SolveConfig& cfg, int p) {
  if (cfg.max_iter < 0) throw std::invalid_argument("max_iter must be >= 1");
  return cfg.max_iter == 0 ? 10 * p : cfg.max_iter;
}

class ScopedTimer {
 public:
  explicit ScopedTimer(double& out) : out_(out), start_(std::chrono::steady_clock::now()) {}
  ~ScopedTimer() { out_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  double& out_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Least-squares solution of min ||H W - F|| by column-pivoted QR; returns
/// the pivoted basic solution when H is rank deficient.
inline Eigen::VectorXd qr_least_squares(const Eigen::MatrixXd& H, const Eigen::VectorXd& F) {
  if (!H.allFinite() || !F.allFinite()) throw std::invalid_argument("qr_least_squares: non-finite input");
  if (H.rows() == 0 || H.cols() == 0) throw std::invalid_argument("qr_least_squares: empty system");
  return H.colPivHouseholderQr().solve(F);
}

/// Preconditioned conjugate gradients on A x = b with x0 = 0. Stops when
/// ||M^{-1}(Ax-b)|| / ||M^{-1}b|| <= rel_tol; A and M^{-1} symmetric positive
/// (semi)definite. Breakdown returns the best iterate with the flag set.
inline SolveReport cg(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b, const SolveConfig& cfg) {
  SolveReport rep;
  detail::ScopedTimer timer(rep.solve_seconds);
  const int n = static_cast<int>(b.size());
  const int max_iter = detail::effective_max_iter(cfg, n);
  const double bnorm = b.norm();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = M(r);
  const double z0norm = z.norm();
  if (z0norm == 0.0) {
    rep.W = x;
    rep.converged = true;
    rep.residual_history = {0.0};
    rep.true_residual_history = {0.0};
    return rep;
  }
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  rep.residual_history.push_back(1.0);
  rep.true_residual_history.push_back(bnorm > 0.0 ? 1.0 : 0.0);

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd Ap = A(p);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0 || rz == 0.0) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    z = M(r);
    const double rel = z.norm() / z0norm;
    rep.residual_history.push_back(rel);
    rep.true_residual_history.push_back(bnorm > 0.0 ? r.norm() / bnorm : r.norm());
    ++rep.iterations;
    if (rel <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    rz = rz_new;
    p = z + beta * p;
  }
  rep.W = x;
  rep.final_preconditioned_residual = rep.residual_history.back();
  return rep;
}

/// Conjugate gradient squared (transpose-free) on M^{-1} A x = M^{-1} b.
inline SolveReport cgs(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b, const SolveConfig& cfg) {
  SolveReport rep;
  detail::ScopedTimer timer(rep.solve_seconds);
  const int n = static_cast<int>(b.size());
  const int max_iter = detail::effective_max_iter(cfg, n);
  const double bnorm = b.norm();

  auto C = [&](const Eigen::VectorXd& v) { return M(A(v)); };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd g = M(b);
  const double gnorm = g.norm();
  if (gnorm == 0.0) {
    rep.W = x;
    rep.converged = true;
    rep.residual_history = {0.0};
    rep.true_residual_history = {0.0};
    return rep;
  }
  Eigen::VectorXd r = g;
  const Eigen::VectorXd rstar = g;
  Eigen::VectorXd p = r, u = r;
  double rho = rstar.dot(r);
  rep.residual_history.push_back(1.0);
  rep.true_residual_history.push_back(bnorm > 0.0 ? 1.0 : 0.0);

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd Cp = C(p);
    const double sigma = rstar.dot(Cp);
    if (sigma == 0.0 || rho == 0.0) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rho / sigma;
    const Eigen::VectorXd q = u - alpha * Cp;
    const Eigen::VectorXd uq = u + q;
    x += alpha * uq;
    r -= alpha * C(uq);
    const double rel = r.norm() / gnorm;
    rep.residual_history.push_back(rel);
    rep.true_residual_history.push_back(M.is_identity ? rel : (bnorm > 0.0 ? (b - A(x)).norm() / bnorm : 0.0));
    ++rep.iterations;
    if (rel <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }
    const double rho_new = rstar.dot(r);
    const double beta = rho_new / rho;
    rho = rho_new;
    u = r + beta * q;
    p = u + beta * (q + beta * p);
  }
  rep.W = x;
  rep.final_preconditioned_residual = rep.residual_history.back();
  return rep;
}

/// Biconjugate gradients on M^{-1} A x = M^{-1} b. The dual recurrence uses
/// the transpose actions where provided.
inline SolveReport bicg(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b, const SolveConfig& cfg) {
  SolveReport rep;
  detail::ScopedTimer timer(rep.solve_seconds);
  const int n = static_cast<int>(b.size());
  const int max_iter = detail::effective_max_iter(cfg, n);
  const double bnorm = b.norm();

  auto C = [&](const Eigen::VectorXd& v) { return M(A(v)); };
  auto Ct = [&](const Eigen::VectorXd& v) { return A.transpose_apply(M.transpose_apply(v)); };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd g = M(b);
  const double gnorm = g.norm();
  if (gnorm == 0.0) {
    rep.W = x;
    rep.converged = true;
    rep.residual_history = {0.0};
    rep.true_residual_history = {0.0};
    return rep;
  }
  Eigen::VectorXd r = g, rstar = g;
  Eigen::VectorXd p = r, pstar = rstar;
  double rho = rstar.dot(r);
  rep.residual_history.push_back(1.0);
  rep.true_residual_history.push_back(bnorm > 0.0 ? 1.0 : 0.0);

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd Cp = C(p);
    const double sigma = pstar.dot(Cp);
    if (sigma == 0.0 || rho == 0.0) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rho / sigma;
    x += alpha * p;
    r -= alpha * Cp;
    rstar -= alpha * Ct(pstar);
    const double rel = r.norm() / gnorm;
    rep.residual_history.push_back(rel);
    rep.true_residual_history.push_back(M.is_identity ? rel : (bnorm > 0.0 ? (b - A(x)).norm() / bnorm : 0.0));
    ++rep.iterations;
    if (rel <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }
    const double rho_new = rstar.dot(r);
    const double beta = rho_new / rho;
    rho = rho_new;
    p = r + beta * p;
    pstar = rstar + beta * pstar;
  }
  rep.W = x;
  rep.final_preconditioned_residual = rep.residual_history.back();
  return rep;
}

/// Left-preconditioned GMRES with modified Gram-Schmidt Arnoldi and Givens
/// rotations. gmres_restart = 0 runs the full method (basis capped at
/// kMaxFullGmresBasis); happy breakdown counts as convergence.
inline SolveReport gmres(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b, const SolveConfig& cfg) {
  SolveReport rep;
  detail::ScopedTimer timer(rep.solve_seconds);
  const int n = static_cast<int>(b.size());
  const int max_iter = detail::effective_max_iter(cfg, n);
  const double bnorm = b.norm();

  const Eigen::VectorXd g0 = M(b);
  const double gnorm0 = g0.norm();
  if (gnorm0 == 0.0) {
    rep.W = Eigen::VectorXd::Zero(n);
    rep.converged = true;
    rep.residual_history = {0.0};
    rep.true_residual_history = {0.0};
    return rep;
  }

  int cycle_len = cfg.gmres_restart > 0 ? cfg.gmres_restart : std::min(max_iter, n);
  if (cfg.gmres_restart == 0 && cycle_len > kMaxFullGmresBasis)
    throw std::runtime_error("full GMRES basis of " + std::to_string(cycle_len) +
                             " vectors exceeds the cap; configure gmres_restart");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  rep.residual_history.push_back(1.0);
  rep.true_residual_history.push_back(bnorm > 0.0 ? 1.0 : 0.0);

  int iters_left = max_iter;
  while (iters_left > 0 && !rep.converged && !rep.breakdown) {
    const Eigen::VectorXd r0 = M.is_identity ? Eigen::VectorXd(b - A(x)) : Eigen::VectorXd(M(b - A(x)));
    const double beta = r0.norm();
    if (beta / gnorm0 <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }

    const int len = std::min(cycle_len, iters_left);
    std::vector<Eigen::VectorXd> V;
    V.reserve(static_cast<std::size_t>(len) + 1);
    V.push_back(r0 / beta);
    Eigen::MatrixXd Hm = Eigen::MatrixXd::Zero(len + 1, len);
    Eigen::VectorXd cs(len), sn(len);
    Eigen::VectorXd gvec = Eigen::VectorXd::Zero(len + 1);
    gvec(0) = beta;

    int k = 0;
    for (; k < len; ) {
      Eigen::VectorXd w = M.is_identity ? A(V[static_cast<std::size_t>(k)]) : M(A(V[static_cast<std::size_t>(k)]));
      for (int i = 0; i <= k; ++i) {
        Hm(i, k) = w.dot(V[static_cast<std::size_t>(i)]);
        w -= Hm(i, k) * V[static_cast<std::size_t>(i)];
      }
      // Second Gram-Schmidt pass; plain MGS loses orthogonality on the
      // ill-conditioned normal equations and delays convergence.
      for (int i = 0; i <= k; ++i) {
        const double corr = w.dot(V[static_cast<std::size_t>(i)]);
        Hm(i, k) += corr;
        w -= corr * V[static_cast<std::size_t>(i)];
      }
      const double hnext = w.norm();
      Hm(k + 1, k) = hnext;
      if (hnext > 0.0) V.push_back(w / hnext);

      for (int i = 0; i < k; ++i) {
        const double t = cs(i) * Hm(i, k) + sn(i) * Hm(i + 1, k);
        Hm(i + 1, k) = -sn(i) * Hm(i, k) + cs(i) * Hm(i + 1, k);
        Hm(i, k) = t;
      }
      const double denom = std::hypot(Hm(k, k), Hm(k + 1, k));
      if (denom == 0.0) {
        rep.breakdown = true;
        break;
      }
      cs(k) = Hm(k, k) / denom;
      sn(k) = Hm(k + 1, k) / denom;
      Hm(k, k) = denom;
      Hm(k + 1, k) = 0.0;
      gvec(k + 1) = -sn(k) * gvec(k);
      gvec(k) *= cs(k);

      const double rel = std::abs(gvec(k + 1)) / gnorm0;
      rep.residual_history.push_back(rel);
      ++rep.iterations;
      --iters_left;
      ++k;

      if (M.is_identity) {
        rep.true_residual_history.push_back(rel);
      } else {
        const Eigen::VectorXd y = Hm.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(gvec.head(k));
        Eigen::VectorXd xk = x;
        for (int i = 0; i < k; ++i) xk += y(i) * V[static_cast<std::size_t>(i)];
        rep.true_residual_history.push_back(bnorm > 0.0 ? (b - A(xk)).norm() / bnorm : 0.0);
      }

      if (rel <= cfg.rel_tol || hnext == 0.0) {
        rep.converged = true;  // happy breakdown yields the exact subspace solution
        break;
      }
      if (iters_left == 0) break;
    }

    if (k > 0) {
      const Eigen::VectorXd y = Hm.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(gvec.head(k));
      for (int i = 0; i < k; ++i) x += y(i) * V[static_cast<std::size_t>(i)];
    }
    if (cfg.gmres_restart == 0 && !rep.converged && !rep.breakdown && iters_left > 0 && k == cycle_len) {
      // Full basis consumed without convergence; continuing would re-span
      // the same Krylov space, so report non-convergence.
      break;
    }
  }
  rep.W = x;
  rep.final_preconditioned_residual = rep.residual_history.back();
  return rep;
}

inline SolveReport solve_with(const SolveConfig& cfg, const LinearMap& A, const LinearMap& M,
                              const Eigen::VectorXd& b) {
  switch (cfg.solver) {
    case SolverKind::cg: return cg(A, M, b, cfg);
    case SolverKind::cgs: return cgs(A, M, b, cfg);
    case SolverKind::bicg: return bicg(A, M, b, cfg);
    case SolverKind::gmres: return gmres(A, M, b, cfg);
    case SolverKind::qr_direct: break;
  }
  throw std::invalid_argument("qr_direct is handled by qr_least_squares, not the iterative driver");
}

/// Dense spectrum cap for the diagnostics below.
inline constexpr int kDenseSpectrumCap = 4000;

inline void check_dense_cap(Eigen::Index n, int cap = kDenseSpectrumCap) {
  if (n > cap)
    throw std::invalid_argument("matrix of size " + std::to_string(n) +
                                " exceeds the dense diagnostics cap (" + std::to_string(cap) + ")");
}

/// All eigenvalues of a (generally nonsymmetric) real matrix.
inline std::vector<std::complex<double>> spectrum(const Eigen::MatrixXd& A, int cap = kDenseSpectrumCap) {
  if (A.rows() != A.cols()) throw std::invalid_argument("spectrum: matrix must be square");
  check_dense_cap(A.rows(), cap);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return out;
}

/// Singular values in nonincreasing order.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& A, int cap = kDenseSpectrumCap) {
  check_dense_cap(std::min(A.rows(), A.cols()), cap);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues();
}

/// sigma_max / sigma_min over the positive singular values.
inline double condition_number(const Eigen::MatrixXd& A, int cap = kDenseSpectrumCap) {
  const Eigen::VectorXd sv = singular_values(A, cap);
  double smin = 0.0;
  for (Eigen::Index i = sv.size() - 1; i >= 0; --i)
    if (sv(i) > 0.0) {
      smin = sv(i);
      break;
    }
  if (smin == 0.0) throw std::domain_error("condition number undefined: all singular values are zero");
  return sv(0) / smin;
}

}  // namespace rannddm
