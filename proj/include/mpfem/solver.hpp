#pragma once

// Time marching of the max-plus finite element coefficients, the
// Fleming-McEneaney baseline, value reconstruction, and method comparison.

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpfem/assembly.hpp"
#include "mpfem/parallel.hpp"
#include "mpfem/projections.hpp"

namespace mpfem {

struct SolverState {
  TropicalVector lambda;
  double t = 0;
  int step_index = 0;
};

struct RunGrids {
  PointList eval;    // residuation / reconstruction grid over X
  PointList window;  // grid where the reported error is measured
};

inline RunGrids make_run_grids(const BoxDomain& X, double eval_step,
                               const BoxDomain& window, double window_step) {
  return {regular_grid(X, eval_step), regular_grid(window, window_step)};
}

struct RunReport {
  std::map<std::string, double> params;
  std::string variant;
  double assembly_seconds = 0;
  std::vector<double> step_seconds;
  GridFunction final_values;  // v_h^T on the window grid
  std::optional<double> linf_error;
  AssemblyDiagnostics diagnostics;
  long long clamped_coefficients = 0;  // +inf coefficients dropped on reconstruction
  bool band_approximation = false;
  std::vector<TropicalVector> history;  // per-step coefficients, when retained
};

/// lambda0_i = min over the grid of (-w_i(x) + phi(x)).
inline TropicalVector init_coefficients(const BasisFamily& W, const ScalarField& phi,
                                        const PointList& grid) {
  if (grid.count() == 0) throw std::invalid_argument("init_coefficients: empty grid");
  TropicalVector lam(W.count(), pos_inf);
  parallel_for(W.count(), [&](int ib, int ie) {
    for (int x = 0; x < grid.count(); ++x) {
      auto pt = grid.point(x);
      double px = phi(pt);
      for (int i = ib; i < ie; ++i) {
        double t = trop_mul_dual(-W.value(i, pt), px);
        if (t < lam[i]) lam[i] = t;
      }
    }
  });
  return lam;
}

/// One explicit min-max update: lambda' = M \ (K lambda).
inline SolverState step(const SolverState& state, const TropicalMatrix& M,
                        const TropicalMatrix& K, double dt) {
  SolverState next;
  next.lambda = residual_apply(M, max_plus_matvec(K, state.lambda));
  next.t = state.t + dt;
  next.step_index = state.step_index + 1;
  return next;
}

/// v_h(x) = max_i (lambda_i + w_i(x)); -inf where nothing contributes.
/// +inf coefficients (possible only under band truncation) are skipped.
inline GridFunction reconstruct_value(const BasisFamily& W, const TropicalVector& lambda,
                                      const PointList& grid,
                                      long long* clamped = nullptr) {
  GridFunction out{grid, std::vector<double>(grid.count(), neg_inf)};
  long long skipped = 0;
  for (int i = 0; i < W.count(); ++i)
    if (lambda[i] == pos_inf) ++skipped;
  if (clamped) *clamped += skipped;
  parallel_for(grid.count(), [&](int xb, int xe) {
    for (int x = xb; x < xe; ++x) {
      auto pt = grid.point(x);
      double best = neg_inf;
      for (int i = 0; i < W.count(); ++i) {
        if (lambda[i] == pos_inf) continue;
        double t = trop_mul(W.value(i, pt), lambda[i]);
        if (t > best) best = t;
      }
      out.values[x] = best;
    }
  });
  return out;
}

namespace detail {

inline int step_count(double horizon, double dt) {
  double n = horizon / dt;
  int N = static_cast<int>(std::lround(n));
  if (N < 1 || std::abs(N * dt - horizon) > 1e-9)
    throw std::invalid_argument("time step does not divide the horizon");
  return N;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Full solve: assemble, march N = T/dt steps, reconstruct, report.
inline RunReport run(const ControlProblem& prob, const BasisFamily& W, const BasisFamily& Z,
                     const AssemblyConfig& cfg, const RunGrids& grids,
                     const std::function<double(std::span<const double>)>* reference = nullptr,
                     bool keep_history = false) {
  const int N = detail::step_count(prob.horizon, cfg.dt);
  RunReport rep;
  rep.variant = to_string(cfg.variant);
  rep.params["delta"] = cfg.dt;
  rep.params["p"] = W.count();
  rep.params["q"] = Z.count();
  rep.params["cutoff"] = cfg.cutoff_radius;
  rep.band_approximation = cfg.cutoff_radius != pos_inf;

  auto t0 = std::chrono::steady_clock::now();
  TropicalMatrix M = assemble_mass(Z, W, prob.domain, cfg.cutoff_radius, &rep.diagnostics);
  TropicalMatrix K = assemble_stiffness(Z, W, prob, cfg, &rep.diagnostics);
  rep.assembly_seconds = detail::seconds_since(t0);

  SolverState s;
  s.lambda = init_coefficients(W, prob.terminal_reward, grids.eval);
  if (keep_history) rep.history.push_back(s.lambda);
  for (int n = 0; n < N; ++n) {
    auto ts = std::chrono::steady_clock::now();
    s = step(s, M, K, cfg.dt);
    rep.step_seconds.push_back(detail::seconds_since(ts));
    if (keep_history) rep.history.push_back(s.lambda);
  }

  rep.final_values = reconstruct_value(W, s.lambda, grids.window, &rep.clamped_coefficients);
  if (reference) {
    double err = 0;
    for (int x = 0; x < grids.window.count(); ++x)
      err = std::max(err, std::abs(rep.final_values.values[x] -
                                   (*reference)(grids.window.point(x))));
    rep.linf_error = err;
  }
  return rep;
}

namespace detail {

/// |grid| x p matrix of element values on a grid.
inline TropicalMatrix grid_value_matrix(const BasisFamily& W, const PointList& grid) {
  TropicalMatrix A = TropicalMatrix::make_dense(grid.count(), W.count());
  parallel_for(grid.count(), [&](int xb, int xe) {
    for (int x = xb; x < xe; ++x) {
      auto pt = grid.point(x);
      for (int i = 0; i < W.count(); ++i) A.dense_at(x, i) = W.value(i, pt);
    }
  });
  return A;
}

/// |grid| x p matrix of [S^dt w_i]_H values on a grid.
inline TropicalMatrix grid_image_matrix(const BasisFamily& W, const ControlProblem& prob,
                                        double dt, const PointList& grid) {
  if (W.kind != ElementKind::quadratic)
    throw std::logic_error("grid_image_matrix: family must be quadratic");
  TropicalMatrix A = TropicalMatrix::make_dense(grid.count(), W.count());
  parallel_for(grid.count(), [&](int xb, int xe) {
    std::vector<double> g(W.dim);
    for (int x = xb; x < xe; ++x) {
      auto pt = grid.point(x);
      for (int i = 0; i < W.count(); ++i) {
        auto c = W.center(i);
        for (int k = 0; k < W.dim; ++k) g[k] = -W.param * (pt[k] - c[k]);
        double h = (dt == 0) ? 0.0 : dt * hamiltonian_eval(prob, pt, g);
        A.dense_at(x, i) = W.value(i, pt) + h;
      }
    }
  });
  return A;
}

/// G = A \ B with G_ik = min_x (-A_xi + B_xk).
inline TropicalMatrix matrix_residual(const TropicalMatrix& A, const TropicalMatrix& B) {
  if (A.rows() != B.rows()) throw std::invalid_argument("matrix_residual: row mismatch");
  TropicalMatrix G = TropicalMatrix::make_dense(A.cols(), B.cols(), pos_inf);
  parallel_for(A.cols(), [&](int ib, int ie) {
    for (int i = ib; i < ie; ++i) {
      for (int x = 0; x < A.rows(); ++x) {
        double ai = A.dense_at(x, i);
        for (int k = 0; k < B.cols(); ++k) {
          double t = trop_mul_dual(-ai, B.dense_at(x, k));
          if (t < G.dense_at(i, k)) G.dense_at(i, k) = t;
        }
      }
    }
  });
  return G;
}

}  // namespace detail

/// Baseline recursion mu^{t+dt} = (W \ [S^dt W]_H) mu^t, with the residuation
/// taken over the evaluation grid.
inline RunReport fm_run(const ControlProblem& prob, const BasisFamily& W,
                        const AssemblyConfig& cfg, const RunGrids& grids,
                        const std::function<double(std::span<const double>)>* reference = nullptr,
                        bool keep_history = false) {
  const int N = detail::step_count(prob.horizon, cfg.dt);
  RunReport rep;
  rep.variant = "fm";
  rep.params["delta"] = cfg.dt;
  rep.params["p"] = W.count();

  auto t0 = std::chrono::steady_clock::now();
  TropicalMatrix Wg = detail::grid_value_matrix(W, grids.eval);
  TropicalMatrix E = detail::grid_image_matrix(W, prob, cfg.dt, grids.eval);
  TropicalMatrix G = detail::matrix_residual(Wg, E);
  rep.assembly_seconds = detail::seconds_since(t0);

  TropicalVector mu = init_coefficients(W, prob.terminal_reward, grids.eval);
  if (keep_history) rep.history.push_back(mu);
  for (int n = 0; n < N; ++n) {
    auto ts = std::chrono::steady_clock::now();
    mu = max_plus_matvec(G, mu);
    rep.step_seconds.push_back(detail::seconds_since(ts));
    if (keep_history) rep.history.push_back(mu);
  }

  rep.final_values = reconstruct_value(W, mu, grids.window, &rep.clamped_coefficients);
  if (reference) {
    double err = 0;
    for (int x = 0; x < grids.window.count(); ++x)
      err = std::max(err, std::abs(rep.final_values.values[x] -
                                   (*reference)(grids.window.point(x))));
    rep.linf_error = err;
  }
  return rep;
}

struct ComparisonReport {
  int steps = 0;
  long long ordering_violations = 0;  // points where W mu > W lambda
  double max_violation = 0;
  std::vector<double> fm_values, mfem_values;  // on the window grid at T
  std::optional<double> fm_error, mfem_error;
};

/// Runs the baseline and the limit-case finite element recursion on identical
/// one-step images and checks W mu^t <= W lambda^t pointwise at every step.
inline ComparisonReport compare_methods(
    const ControlProblem& prob, const BasisFamily& W, const AssemblyConfig& cfg,
    const RunGrids& grids,
    const std::function<double(std::span<const double>)>* reference = nullptr) {
  const int N = detail::step_count(prob.horizon, cfg.dt);
  TropicalMatrix Wg = detail::grid_value_matrix(W, grids.eval);
  TropicalMatrix E = detail::grid_image_matrix(W, prob, cfg.dt, grids.eval);
  TropicalMatrix G = detail::matrix_residual(Wg, E);

  ComparisonReport rep;
  rep.steps = N;
  TropicalVector mu = init_coefficients(W, prob.terminal_reward, grids.eval);
  TropicalVector lambda = mu;
  for (int n = 0; n < N; ++n) {
    mu = max_plus_matvec(G, mu);
    lambda = residual_apply(Wg, max_plus_matvec(E, lambda));
    TropicalVector wmu = max_plus_matvec(Wg, mu);
    TropicalVector wlam = max_plus_matvec(Wg, lambda);
    for (std::size_t x = 0; x < wmu.size(); ++x) {
      double gap = wmu[x] - wlam[x];
      if (gap > 0) {
        ++rep.ordering_violations;
        rep.max_violation = std::max(rep.max_violation, gap);
      }
    }
  }

  GridFunction fm = reconstruct_value(W, mu, grids.window);
  GridFunction fe = reconstruct_value(W, lambda, grids.window);
  rep.fm_values = fm.values;
  rep.mfem_values = fe.values;
  if (reference) {
    double efm = 0, efe = 0;
    for (int x = 0; x < grids.window.count(); ++x) {
      double r = (*reference)(grids.window.point(x));
      efm = std::max(efm, std::abs(fm.values[x] - r));
      efe = std::max(efe, std::abs(fe.values[x] - r));
    }
    rep.fm_error = efm;
    rep.mfem_error = efe;
  }
  return rep;
}

/// CSV rows `x1,...,xn,value` in the grid's lexicographic point order.
inline void dump_grid_csv(const GridFunction& g, std::ostream& os) {
  for (int x = 0; x < g.grid.count(); ++x) {
    auto pt = g.grid.point(x);
    for (int k = 0; k < g.grid.dim; ++k) os << format_scalar(pt[k]) << ',';
    os << format_scalar(g.values[x]) << '\n';
  }
}

}  // namespace mpfem
