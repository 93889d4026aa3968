#pragma once

// Optimal-control problem description (Hamiltonian, terminal reward, domains,
// horizon), discretization grids, and Voronoi-radius geometry.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpfem/elements.hpp"

namespace mpfem {

/// A finite list of points in R^n, stored flat (count x dim).
struct PointList {
  int dim = 1;
  std::vector<double> xs;

  int count() const { return static_cast<int>(xs.size()) / dim; }
  std::span<const double> point(int i) const {
    return {xs.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  void push(std::span<const double> p) { xs.insert(xs.end(), p.begin(), p.end()); }
};

/// (Z dx)^n intersected with the box, ordered lexicographically. Boundary
/// points on the lattice are included (membership tolerance 1e-9 * dx).
inline PointList regular_grid(const BoxDomain& box, double dx) {
  if (dx <= 0) throw std::invalid_argument("regular_grid: dx must be > 0");
  const int n = box.dim();
  const double tol = 1e-9 * dx;
  std::vector<long> kmin(n), kmax(n);
  for (int k = 0; k < n; ++k) {
    kmin[k] = static_cast<long>(std::ceil(box.lo[k] / dx - 1e-9));
    kmax[k] = static_cast<long>(std::floor(box.hi[k] / dx + 1e-9));
    if (kmin[k] > kmax[k]) throw std::invalid_argument("regular_grid: empty intersection");
  }
  (void)tol;
  PointList pts;
  pts.dim = n;
  std::vector<long> idx = kmin;
  std::vector<double> x(n);
  bool done = false;
  while (!done) {
    for (int k = 0; k < n; ++k) x[k] = idx[k] * dx;
    pts.push(x);
    done = true;
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] <= kmax[k]) {
        done = false;
        break;
      }
      idx[k] = kmin[k];
    }
  }
  return pts;
}

struct GridSpec {
  double dx;
  BoxDomain box;
  PointList points;  // derived lattice

  static GridSpec make(const BoxDomain& box, double dx) {
    return {dx, box, regular_grid(box, dx)};
  }
};

/// Sampled estimate of rho_X(P) = sup_{x in X} inf_{p in P} |x - p|_2.
/// A lower estimate; bias is at most (sqrt(n)/2) * sample_step.
inline double voronoi_radius(const PointList& P, const BoxDomain& X, double sample_step) {
  if (P.count() == 0) throw std::invalid_argument("voronoi_radius: empty point set");
  if (sample_step <= 0) throw std::invalid_argument("voronoi_radius: sample_step must be > 0");
  const int n = X.dim();
  std::vector<int> counts(n);
  for (int k = 0; k < n; ++k)
    counts[k] = std::max(2, static_cast<int>(std::ceil((X.hi[k] - X.lo[k]) / sample_step)) + 1);

  double worst = 0;
  std::vector<int> idx(n, 0);
  std::vector<double> x(n);
  bool done = false;
  while (!done) {
    for (int k = 0; k < n; ++k)
      x[k] = X.lo[k] + (X.hi[k] - X.lo[k]) * idx[k] / (counts[k] - 1);
    double nearest = pos_inf;
    for (int i = 0; i < P.count(); ++i) {
      auto p = P.point(i);
      double s = 0;
      for (int k = 0; k < n; ++k) {
        double d = x[k] - p[k];
        s += d * d;
      }
      if (s < nearest) nearest = s;
    }
    worst = std::max(worst, nearest);
    done = true;
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] < counts[k]) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
  }
  return std::sqrt(worst);
}

/// Bounds on the dynamics and running reward, when known.
struct ProblemBounds {
  double M_f = 0, L_f = 0, M_l = 0, L_l = 0;
};

using HamiltonianFn = std::function<double(std::span<const double> x, std::span<const double> p)>;
using ScalarField = std::function<double(std::span<const double> x)>;

struct ControlProblem {
  BoxDomain domain;          // X
  BoxDomain element_domain;  // X enlarged for element centers
  double horizon = 1.0;
  HamiltonianFn hamiltonian;
  ScalarField terminal_reward;
  std::optional<ProblemBounds> bounds;
  double lipschitz_L = 0;      // Lipschitz constant of the value function
  double semiconvexity_c = 0;  // semiconvexity constant of the value function
  /// Trajectories are frozen on the boundary: the Hamiltonian vanishes there.
  bool absorbing_boundary = false;
};

inline double hamiltonian_eval(const ControlProblem& prob, std::span<const double> x,
                               std::span<const double> p) {
  if (prob.absorbing_boundary && prob.domain.on_boundary(x, 1e-12)) return 0.0;
  return prob.hamiltonian(x, p);
}

inline BasisFamily family_from_grid(ElementKind kind, double param, const PointList& pts) {
  BasisFamily f;
  f.kind = kind;
  f.param = param;
  f.dim = pts.dim;
  f.centers = pts.xs;
  return f;
}

}  // namespace mpfem
