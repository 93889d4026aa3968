#pragma once

// Max-plus and min-plus semimodule projectors on grid samplings:
// P_W (largest element of the max-plus span below v), its min-plus
// counterpart, and the combined projector.

#include <vector>

#include "mpfem/problem.hpp"
#include "mpfem/tropical.hpp"

namespace mpfem {

struct GridFunction {
  PointList grid;
  std::vector<double> values;
};

inline GridFunction sample_on_grid(const ScalarField& f, const PointList& grid) {
  GridFunction g{grid, {}};
  g.values.resize(grid.count());
  for (int i = 0; i < grid.count(); ++i) g.values[i] = f(grid.point(i));
  return g;
}

/// lambda_i = min_x (-w_i(x) + v(x)) over the grid.
inline TropicalVector primal_coefficients(const BasisFamily& W, const GridFunction& v) {
  if (v.grid.count() == 0) throw std::invalid_argument("primal_coefficients: empty grid");
  TropicalVector lam(W.count(), pos_inf);
  for (int x = 0; x < v.grid.count(); ++x) {
    auto pt = v.grid.point(x);
    const double vx = v.values[x];
    for (int i = 0; i < W.count(); ++i) {
      double t = trop_mul_dual(-W.value(i, pt), vx);
      if (t < lam[i]) lam[i] = t;
    }
  }
  return lam;
}

/// (P_W v)(x) = max_i (w_i(x) + lambda_i); below v on the grid and idempotent.
inline GridFunction project_primal(const BasisFamily& W, const GridFunction& v) {
  TropicalVector lam = primal_coefficients(W, v);
  GridFunction out{v.grid, std::vector<double>(v.values.size(), neg_inf)};
  for (int x = 0; x < v.grid.count(); ++x) {
    auto pt = v.grid.point(x);
    double best = neg_inf;
    for (int i = 0; i < W.count(); ++i) {
      double t = trop_mul(W.value(i, pt), lam[i]);
      if (t > best) best = t;
    }
    out.values[x] = best;
  }
  return out;
}

/// Min-plus projection from above: mu_j = max_x (z_j(x) + v(x)), then
/// (P v)(x) = min_j (-z_j(x) + mu_j). Result >= v pointwise and idempotent.
inline GridFunction project_dual(const BasisFamily& Z, const GridFunction& v) {
  TropicalVector mu(Z.count(), neg_inf);
  for (int x = 0; x < v.grid.count(); ++x) {
    auto pt = v.grid.point(x);
    const double vx = v.values[x];
    for (int j = 0; j < Z.count(); ++j) {
      double t = trop_mul(Z.value(j, pt), vx);
      if (t > mu[j]) mu[j] = t;
    }
  }
  GridFunction out{v.grid, std::vector<double>(v.values.size(), pos_inf)};
  for (int x = 0; x < v.grid.count(); ++x) {
    auto pt = v.grid.point(x);
    double best = pos_inf;
    for (int j = 0; j < Z.count(); ++j) {
      double t = trop_mul_dual(-Z.value(j, pt), mu[j]);
      if (t < best) best = t;
    }
    out.values[x] = best;
  }
  return out;
}

/// Projection on the image of W parallel to the kernel of Z: primal after dual.
inline GridFunction project_combined(const BasisFamily& W, const BasisFamily& Z,
                                     const GridFunction& v) {
  return project_primal(W, project_dual(Z, v));
}

}  // namespace mpfem
