#pragma once

// Mass matrix, the three stiffness approximations, and the one-step semigroup
// approximation [S^dt w](x) = w(x) + dt * H(x, grad w(x)).

#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "mpfem/elements.hpp"
#include "mpfem/parallel.hpp"
#include "mpfem/problem.hpp"
#include "mpfem/tropical.hpp"

namespace mpfem {

enum class StiffnessVariant { k_h, k_tilde, k_dual };

inline const char* to_string(StiffnessVariant v) {
  switch (v) {
    case StiffnessVariant::k_h: return "k_h";
    case StiffnessVariant::k_tilde: return "k_tilde";
    default: return "k_dual";
  }
}

struct AssemblyConfig {
  double dt = 0.1;
  StiffnessVariant variant = StiffnessVariant::k_tilde;
  double coarse_step = 0.1;   // sampled_sup lattice
  double refine_tol = 1e-7;   // sampled_sup bracket tolerance
  double cutoff_radius = pos_inf;  // band cutoff on center distance
};

struct AssemblyDiagnostics {
  long long truncated_entries = 0;  // dropped by the band cutoff
  long long clamped_argmax = 0;     // argmax on the domain boundary
  long long moved_seeds = 0;        // sampled refinement left the seed basin
  long long tie_breaks = 0;         // non-singleton argmax resolved by tie-break
};

namespace detail {

// Uniform bucket index over family centers for band-limited pair enumeration.
struct CenterBuckets {
  double cell;
  int dim;
  std::map<std::vector<long>, std::vector<int>> cells;

  CenterBuckets(const BasisFamily& F, double cell_size) : cell(cell_size), dim(F.dim) {
    std::vector<long> key(dim);
    for (int i = 0; i < F.count(); ++i) {
      auto c = F.center(i);
      for (int k = 0; k < dim; ++k) key[k] = static_cast<long>(std::floor(c[k] / cell));
      cells[key].push_back(i);
    }
  }

  /// Indices (ascending) of centers within `radius` of x.
  void query(std::span<const double> x, double radius, const BasisFamily& F,
             std::vector<int>& out) const {
    out.clear();
    std::vector<long> lo(dim), hi(dim), key(dim);
    for (int k = 0; k < dim; ++k) {
      lo[k] = static_cast<long>(std::floor((x[k] - radius) / cell));
      hi[k] = static_cast<long>(std::floor((x[k] + radius) / cell));
    }
    key = lo;
    const double r2 = radius * radius;
    bool done = false;
    while (!done) {
      auto it = cells.find(key);
      if (it != cells.end()) {
        for (int i : it->second) {
          auto c = F.center(i);
          double s = 0;
          for (int k = 0; k < dim; ++k) {
            double d = x[k] - c[k];
            s += d * d;
          }
          if (s <= r2) out.push_back(i);
        }
      }
      done = true;
      for (int k = dim - 1; k >= 0; --k) {
        if (++key[k] <= hi[k]) {
          done = false;
          break;
        }
        key[k] = lo[k];
      }
    }
    std::sort(out.begin(), out.end());
  }
};

inline bool on_box_bound(std::span<const double> x, const BoxDomain& X) {
  for (int k = 0; k < X.dim(); ++k)
    if (x[k] == X.lo[k] || x[k] == X.hi[k]) return true;
  return false;
}

// Shared skeleton: evaluates `entry(j, i, xstar)` for every in-band pair.
template <class EntryFn>
TropicalMatrix assemble_pairs(const BasisFamily& Z, const BasisFamily& W,
                              const BoxDomain& X, double cutoff,
                              AssemblyDiagnostics* diag, EntryFn&& entry) {
  const int q = Z.count(), p = W.count();
  std::atomic<long long> clamped{0};
  if (cutoff == pos_inf) {
    TropicalMatrix M = TropicalMatrix::make_dense(q, p);
    parallel_for(q, [&](int jb, int je) {
      std::vector<double> xstar(X.dim());
      long long local_clamped = 0;
      for (int j = jb; j < je; ++j)
        for (int i = 0; i < p; ++i) {
          pairwise_argmax_into(Z, j, W, i, X, xstar.data());
          if (on_box_bound(xstar, X)) ++local_clamped;
          M.dense_at(j, i) = entry(j, i, xstar);
        }
      clamped += local_clamped;
    });
    if (diag) diag->clamped_argmax += clamped.load();
    return M;
  }

  CenterBuckets buckets(W, cutoff);
  std::vector<std::vector<int>> row_cols(q);
  std::vector<std::vector<double>> row_vals(q);
  parallel_for(q, [&](int jb, int je) {
    std::vector<double> xstar(X.dim());
    std::vector<int> cols;
    long long local_clamped = 0;
    for (int j = jb; j < je; ++j) {
      buckets.query(Z.center(j), cutoff, W, cols);
      row_cols[j] = cols;
      row_vals[j].resize(cols.size());
      for (std::size_t t = 0; t < cols.size(); ++t) {
        int i = cols[t];
        pairwise_argmax_into(Z, j, W, i, X, xstar.data());
        if (on_box_bound(xstar, X)) ++local_clamped;
        row_vals[j][t] = entry(j, i, xstar);
      }
    }
    clamped += local_clamped;
  });
  TropicalMatrix M = TropicalMatrix::make_band(q, p, cutoff);
  std::size_t stored = 0;
  for (int j = 0; j < q; ++j) {
    for (std::size_t t = 0; t < row_cols[j].size(); ++t) M.band_push(row_cols[j][t], row_vals[j][t]);
    stored += row_cols[j].size();
    M.band_end_row();
  }
  if (diag) {
    diag->clamped_argmax += clamped.load();
    diag->truncated_entries +=
        static_cast<long long>(q) * p - static_cast<long long>(stored);
  }
  return M;
}

inline std::vector<double> quad_gradient(const BasisFamily& W, int i,
                                         std::span<const double> x) {
  auto c = W.center(i);
  std::vector<double> g(W.dim);
  for (int k = 0; k < W.dim; ++k) g[k] = -W.param * (x[k] - c[k]);
  return g;
}

}  // namespace detail

/// x -> w(x) + dt * H(x, grad w(x)), evaluable anywhere in X.
inline ScalarField approx_semigroup_image(const BasisFunction& w, const ControlProblem& prob,
                                          double dt) {
  if (w.kind != ElementKind::quadratic)
    throw std::logic_error("approx_semigroup_image: element must be differentiable");
  return [w, &prob, dt](std::span<const double> x) {
    if (dt == 0) return w.value(x);
    auto g = w.gradient(x);
    return w.value(x) + dt * hamiltonian_eval(prob, x, g);
  };
}

/// M_ji = sup_X (z_j + w_i), exact closed form.
inline TropicalMatrix assemble_mass(const BasisFamily& Z, const BasisFamily& W,
                                    const BoxDomain& X, double cutoff = pos_inf,
                                    AssemblyDiagnostics* diag = nullptr) {
  return detail::assemble_pairs(Z, W, X, cutoff, diag,
                                [&](int j, int i, std::span<const double> xs) {
                                  return Z.value(j, xs) + W.value(i, xs);
                                });
}

/// K~_ji = M_ji + dt * H(x*, grad w_i(x*)) at the argmax x* of z_j + w_i.
inline TropicalMatrix assemble_stiffness_tilde(const BasisFamily& Z, const BasisFamily& W,
                                               const ControlProblem& prob,
                                               const AssemblyConfig& cfg,
                                               AssemblyDiagnostics* diag = nullptr) {
  if (W.kind != ElementKind::quadratic)
    throw std::logic_error("assemble_stiffness_tilde: trial family must be quadratic");
  return detail::assemble_pairs(
      Z, W, prob.domain, cfg.cutoff_radius, diag,
      [&](int j, int i, std::span<const double> xs) {
        double m = Z.value(j, xs) + W.value(i, xs);
        if (cfg.dt == 0) return m;
        auto g = detail::quad_gradient(W, i, xs);
        return m + cfg.dt * hamiltonian_eval(prob, xs, g);
      });
}

/// K_ji = sup_X (z_j + w_i + dt H(., grad w_i)), by seeded multi-start search.
inline TropicalMatrix assemble_stiffness_H(const BasisFamily& Z, const BasisFamily& W,
                                           const ControlProblem& prob,
                                           const AssemblyConfig& cfg,
                                           AssemblyDiagnostics* diag = nullptr) {
  if (W.kind != ElementKind::quadratic)
    throw std::logic_error("assemble_stiffness_H: trial family must be quadratic");
  std::atomic<long long> moved{0};
  TropicalMatrix K = detail::assemble_pairs(
      Z, W, prob.domain, cfg.cutoff_radius, diag,
      [&](int j, int i, std::span<const double> xs) {
        // dt = 0 leaves the objective equal to z + w, so the closed form is exact.
        if (cfg.dt == 0) return Z.value(j, xs) + W.value(i, xs);
        auto obj = [&](std::span<const double> x) {
          auto g = detail::quad_gradient(W, i, x);
          return Z.value(j, x) + W.value(i, x) +
                 cfg.dt * hamiltonian_eval(prob, x, g);
        };
        SupResult r = sampled_sup(obj, prob.domain, cfg.coarse_step, cfg.refine_tol,
                                  {{xs.begin(), xs.end()}});
        double moved_by = 0;
        for (int k = 0; k < prob.domain.dim(); ++k)
          moved_by = std::max(moved_by, std::abs(r.argmax[k] - xs[k]));
        if (moved_by > cfg.coarse_step) ++moved;
        return r.value;
      });
  if (diag) diag->moved_seeds += moved.load();
  return K;
}

/// Dual variant: K_ji = sup_X (z_j + dt H(., -grad z_j) + w_i); the test
/// family carries the gradient, so the trial family may be P1.
inline TropicalMatrix assemble_stiffness_dual(const BasisFamily& Z, const BasisFamily& W,
                                              const ControlProblem& prob,
                                              const AssemblyConfig& cfg,
                                              AssemblyDiagnostics* diag = nullptr) {
  if (Z.kind != ElementKind::quadratic)
    throw std::logic_error("assemble_stiffness_dual: test family must be quadratic");
  return detail::assemble_pairs(
      Z, W, prob.domain, cfg.cutoff_radius, diag,
      [&](int j, int i, std::span<const double> xs) {
        if (cfg.dt == 0) return Z.value(j, xs) + W.value(i, xs);
        auto obj = [&](std::span<const double> x) {
          auto g = detail::quad_gradient(Z, j, x);
          for (double& gk : g) gk = -gk;
          return Z.value(j, x) + W.value(i, x) +
                 cfg.dt * hamiltonian_eval(prob, x, g);
        };
        SupResult r = sampled_sup(obj, prob.domain, cfg.coarse_step, cfg.refine_tol,
                                  {{xs.begin(), xs.end()}});
        return r.value;
      });
}

inline TropicalMatrix assemble_stiffness(const BasisFamily& Z, const BasisFamily& W,
                                         const ControlProblem& prob,
                                         const AssemblyConfig& cfg,
                                         AssemblyDiagnostics* diag = nullptr) {
  switch (cfg.variant) {
    case StiffnessVariant::k_h: return assemble_stiffness_H(Z, W, prob, cfg, diag);
    case StiffnessVariant::k_dual: return assemble_stiffness_dual(Z, W, prob, cfg, diag);
    default: return assemble_stiffness_tilde(Z, W, prob, cfg, diag);
  }
}

/// Baseline kernel G_ik = inf_X (-w_i + [S^dt w_k]_H), by multi-start search
/// on the negated objective (a difference of concave functions).
inline TropicalMatrix assemble_fm_kernel(const BasisFamily& W, const ControlProblem& prob,
                                         const AssemblyConfig& cfg) {
  if (W.kind != ElementKind::quadratic)
    throw std::logic_error("assemble_fm_kernel: family must be quadratic");
  const int p = W.count();
  TropicalMatrix G = TropicalMatrix::make_dense(p, p);
  parallel_for(p, [&](int ib, int ie) {
    for (int i = ib; i < ie; ++i) {
      auto ci = W.center(i);
      for (int k = 0; k < p; ++k) {
        auto ck = W.center(k);
        auto neg_obj = [&](std::span<const double> x) {
          auto g = detail::quad_gradient(W, k, x);
          double img = W.value(k, x) + (cfg.dt == 0 ? 0.0
                                                    : cfg.dt * hamiltonian_eval(prob, x, g));
          return W.value(i, x) - img;
        };
        std::vector<double> mid(W.dim);
        for (int d = 0; d < W.dim; ++d) mid[d] = 0.5 * (ci[d] + ck[d]);
        SupResult r = sampled_sup(neg_obj, prob.domain, cfg.coarse_step, cfg.refine_tol,
                                  {{ci.begin(), ci.end()}, {ck.begin(), ck.end()}, mid});
        G.dense_at(i, k) = -r.value;
      }
    }
  });
  return G;
}

}  // namespace mpfem
