#include <cmath>

#include "doctest.h"
#include "mpfem/projections.hpp"

using namespace mpfem;

namespace {

GridFunction sine_sample() {
  PointList grid = regular_grid(BoxDomain::interval(-3, 3), 0.01);
  return sample_on_grid([](std::span<const double> x) { return std::sin(x[0]); }, grid);
}

BasisFamily quad_family(double c, double step) {
  return family_from_grid(ElementKind::quadratic, c,
                          regular_grid(BoxDomain::interval(-4, 4), step));
}

BasisFamily lip_family(double a, double step) {
  return family_from_grid(ElementKind::lipschitz, a,
                          regular_grid(BoxDomain::interval(-3, 3), step));
}

}  // namespace

TEST_CASE("primal projection stays below, dual stays above") {
  GridFunction v = sine_sample();
  BasisFamily W = quad_family(1.0, 0.2);
  BasisFamily Z = lip_family(1.5, 0.2);

  GridFunction pw = project_primal(W, v);
  GridFunction pz = project_dual(Z, v);
  for (std::size_t x = 0; x < v.values.size(); ++x) {
    CHECK(pw.values[x] <= v.values[x] + 1e-12);
    CHECK(pz.values[x] >= v.values[x] - 1e-12);
  }
}

TEST_CASE("projectors are idempotent") {
  GridFunction v = sine_sample();
  BasisFamily W = quad_family(1.0, 0.2);
  BasisFamily Z = lip_family(1.5, 0.2);

  GridFunction pw = project_primal(W, v);
  GridFunction pw2 = project_primal(W, pw);
  CHECK(sup_norm_distance(pw.values, pw2.values) <= 1e-12);

  GridFunction pz = project_dual(Z, v);
  GridFunction pz2 = project_dual(Z, pz);
  CHECK(sup_norm_distance(pz.values, pz2.values) <= 1e-12);

  GridFunction pi = project_combined(W, Z, v);
  GridFunction pi2 = project_combined(W, Z, pi);
  CHECK(sup_norm_distance(pi.values, pi2.values) <= 1e-12);
}

TEST_CASE("functions already in the span are reproduced") {
  BasisFamily W = quad_family(2.0, 0.5);
  PointList grid = regular_grid(BoxDomain::interval(-3, 3), 0.01);
  // max-plus combination of two elements of W
  GridFunction v = sample_on_grid(
      [&](std::span<const double> x) {
        return std::max(W.value(3, x) + 0.7, W.value(7, x) - 0.2);
      },
      grid);
  GridFunction pw = project_primal(W, v);
  CHECK(sup_norm_distance(pw.values, v.values) <= 1e-12);
}

TEST_CASE("projection accuracy improves with the covering radius") {
  GridFunction v = sine_sample();  // 1-semiconvex, 1-Lipschitz
  double coarse = 0, fine = 0;
  for (double step : {0.4, 0.1}) {
    BasisFamily W = quad_family(1.0, step);
    GridFunction pw = project_primal(W, v);
    double err = 0;
    for (std::size_t x = 0; x < v.values.size(); ++x)
      err = std::max(err, std::abs(pw.values[x] - v.values[x]));
    (step == 0.4 ? coarse : fine) = err;
  }
  CHECK(fine < coarse);
  // Lemma-style bound err <= c * diam(X) * rho with rho = step/2
  CHECK(coarse <= 1.0 * 6.0 * 0.2 + 1e-9);
}
