#include <random>

#include "doctest.h"
#include "mpfem/assembly.hpp"

using namespace mpfem;

namespace {

ControlProblem lq_problem() {
  ControlProblem prob;
  prob.domain = BoxDomain::interval(-5, 5);
  prob.element_domain = BoxDomain::interval(-6, 6);
  prob.horizon = 5;
  prob.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return 0.5 * (p[0] * p[0] - x[0] * x[0]);
  };
  prob.terminal_reward = [](std::span<const double>) { return 0.0; };
  return prob;
}

BasisFamily grid_family(ElementKind kind, double param, double lo, double hi, double step) {
  return family_from_grid(kind, param, regular_grid(BoxDomain::interval(lo, hi), step));
}

}  // namespace

TEST_CASE("mass matrix entries match the closed-form pairwise sup") {
  BasisFamily W = grid_family(ElementKind::quadratic, 1.0, -2, 2, 1.0);
  BasisFamily Z = grid_family(ElementKind::lipschitz, 1.5, -1, 1, 1.0);
  BoxDomain X = BoxDomain::interval(-1, 1);
  TropicalMatrix M = assemble_mass(Z, W, X);
  REQUIRE(M.rows() == 3);
  REQUIRE(M.cols() == 5);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 5; ++i) {
      SupResult r = pairwise_sup(Z, j, W, i, X);
      CHECK(M.dense_at(j, i) == r.value);
    }
  // frozen value: z at 0 (a=1.5) against w at 1 (c=1), argmax 0 inside X
  CHECK(M.dense_at(1, 3) == doctest::Approx(-0.5));
}

TEST_CASE("stiffness variants collapse to the mass matrix at dt = 0") {
  ControlProblem prob = lq_problem();
  BasisFamily W = grid_family(ElementKind::quadratic, 1.0, -6, 6, 1.0);
  BasisFamily Z = grid_family(ElementKind::quadratic, 1.0, -6, 6, 1.0);
  TropicalMatrix M = assemble_mass(Z, W, prob.domain);
  AssemblyConfig cfg;
  cfg.dt = 0;
  for (StiffnessVariant v :
       {StiffnessVariant::k_h, StiffnessVariant::k_tilde, StiffnessVariant::k_dual}) {
    cfg.variant = v;
    TropicalMatrix K = assemble_stiffness(Z, W, prob, cfg);
    for (int j = 0; j < K.rows(); ++j)
      for (int i = 0; i < K.cols(); ++i) CHECK(K.dense_at(j, i) == M.dense_at(j, i));
  }
}

TEST_CASE("perturbed-at-argmax stiffness adds dt H at the mass maximizer") {
  ControlProblem prob = lq_problem();
  BasisFamily W = grid_family(ElementKind::quadratic, 1.0, -6, 6, 0.5);
  BasisFamily Z = grid_family(ElementKind::quadratic, 1.0, -6, 6, 0.5);
  AssemblyConfig cfg;
  cfg.dt = 0.25;
  TropicalMatrix M = assemble_mass(Z, W, prob.domain);
  TropicalMatrix K = assemble_stiffness_tilde(Z, W, prob, cfg);
  std::vector<double> xs(1);
  for (int j = 0; j < K.rows(); j += 5)
    for (int i = 0; i < K.cols(); i += 3) {
      pairwise_argmax_into(Z, j, W, i, prob.domain, xs.data());
      auto g = W.element(i).gradient(xs);
      double expect = M.dense_at(j, i) + cfg.dt * prob.hamiltonian(xs, g);
      CHECK(K.dense_at(j, i) == doctest::Approx(expect).epsilon(1e-14));
    }
  CHECK_THROWS_AS(
      assemble_stiffness_tilde(grid_family(ElementKind::quadratic, 1, -1, 1, 1),
                               grid_family(ElementKind::lipschitz, 1, -1, 1, 1), prob, cfg),
      std::logic_error);
}

TEST_CASE("searched stiffness dominates the perturbed one and stays O(dt^2) close") {
  ControlProblem prob = lq_problem();
  BasisFamily W = grid_family(ElementKind::quadratic, 1.0, -6, 6, 1.0);
  BasisFamily Z = grid_family(ElementKind::quadratic, 1.0, -6, 6, 1.0);
  AssemblyConfig cfg;
  cfg.dt = 0.1;
  cfg.coarse_step = 0.2;
  TropicalMatrix Kt = assemble_stiffness_tilde(Z, W, prob, cfg);
  cfg.variant = StiffnessVariant::k_h;
  TropicalMatrix Kh = assemble_stiffness_H(Z, W, prob, cfg);
  for (int j = 0; j < Kt.rows(); ++j)
    for (int i = 0; i < Kt.cols(); ++i) {
      CHECK(Kh.dense_at(j, i) >= Kt.dense_at(j, i) - 1e-9);
      CHECK(Kh.dense_at(j, i) <= Kt.dense_at(j, i) + 0.5);
    }
}

TEST_CASE("band assembly agrees with dense inside the band") {
  ControlProblem prob = lq_problem();
  BasisFamily W = grid_family(ElementKind::quadratic, 1.0, -6, 6, 0.5);
  BasisFamily Z = grid_family(ElementKind::quadratic, 1.0, -6, 6, 0.5);
  AssemblyDiagnostics diag;
  TropicalMatrix dense = assemble_mass(Z, W, prob.domain);
  TropicalMatrix band = assemble_mass(Z, W, prob.domain, 3.0, &diag);
  CHECK(diag.truncated_entries > 0);
  CHECK(band.stored_entries() < dense.stored_entries());
  long long checked = 0;
  for (int j = 0; j < band.rows(); ++j)
    band.for_each_in_row(j, [&](int i, double v) {
      CHECK(v == dense.dense_at(j, i));
      ++checked;
    });
  CHECK(checked == static_cast<long long>(band.stored_entries()));

  // a cutoff wider than the center spread stores everything
  AssemblyDiagnostics diag2;
  TropicalMatrix full = assemble_mass(Z, W, prob.domain, 100.0, &diag2);
  CHECK(diag2.truncated_entries == 0);
  for (int j = 0; j < full.rows(); ++j)
    for (int i = 0; i < full.cols(); ++i) CHECK(full.at(j, i) == dense.dense_at(j, i));
}

TEST_CASE("one-step semigroup image requires a differentiable element") {
  ControlProblem prob = lq_problem();
  BasisFunction w = quadratic_element({1.0}, 1.0);
  ScalarField img = approx_semigroup_image(w, prob, 0.1);
  double x[1] = {0.5};
  auto g = w.gradient(x);
  CHECK(img(x) == doctest::Approx(w.value(x) + 0.1 * prob.hamiltonian(x, g)));
  CHECK_THROWS_AS(approx_semigroup_image(lipschitz_element({0.0}, 1.0), prob, 0.1),
                  std::logic_error);
}

TEST_CASE("baseline kernel entries are sups of element differences") {
  ControlProblem prob = lq_problem();
  BasisFamily W = grid_family(ElementKind::quadratic, 1.0, -2, 2, 1.0);
  AssemblyConfig cfg;
  cfg.dt = 0.1;
  cfg.coarse_step = 0.2;
  TropicalMatrix G = assemble_fm_kernel(W, prob, cfg);
  REQUIRE(G.rows() == W.count());
  REQUIRE(G.cols() == W.count());
  // brute-force one entry
  int i = 1, k = 3;
  double best = neg_inf;
  for (double x = -5; x <= 5; x += 1e-4) {
    double pt[1] = {x};
    auto g = W.element(k).gradient(pt);
    double img = W.value(k, pt) + cfg.dt * prob.hamiltonian(pt, g);
    best = std::max(best, W.value(i, pt) - img);
  }
  CHECK(G.dense_at(i, k) == doctest::Approx(-best).epsilon(1e-6));
}
