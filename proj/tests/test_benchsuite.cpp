#include <cmath>
#include <random>

#include "doctest.h"
#include "mpfem/benchsuite.hpp"

using namespace mpfem;

namespace {

std::mt19937 rng(20240817);

double urand(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// sup over a control lattice of l(x,u) + p . f(x,u)
double brute_hamiltonian(const ControlModel& m, std::span<const double> x,
                         std::span<const double> p, double ustep) {
  const int nu = m.controls.dim();
  std::vector<long> counts(nu);
  for (int k = 0; k < nu; ++k)
    counts[k] =
        static_cast<long>(std::floor((m.controls.hi[k] - m.controls.lo[k]) / ustep)) + 1;
  std::vector<long> idx(nu, 0);
  std::vector<double> u(nu), f(x.size());
  double best = neg_inf;
  bool done = false;
  while (!done) {
    for (int k = 0; k < nu; ++k)
      u[k] = std::min(m.controls.lo[k] + idx[k] * ustep, m.controls.hi[k]);
    m.dynamics(x, u, f);
    double v = m.running_reward(x, u);
    for (std::size_t k = 0; k < x.size(); ++k) v += p[k] * f[k];
    best = std::max(best, v);
    done = true;
    for (int k = nu - 1; k >= 0; --k) {
      if (++idx[k] < counts[k]) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
  }
  return best;
}

std::vector<double> random_interior_point(const BoxDomain& X) {
  std::vector<double> x(X.dim());
  for (int k = 0; k < X.dim(); ++k) {
    double mid = 0.5 * (X.lo[k] + X.hi[k]);
    double half = 0.495 * (X.hi[k] - X.lo[k]);
    x[k] = mid + urand(-half, half);
  }
  return x;
}

}  // namespace

TEST_CASE("reference values at known points") {
  BenchmarkCase f1 = find_case("falcone1");
  double xm1[1] = {-1.0};
  CHECK(reference_value(f1, xm1, 1.0) == doctest::Approx(-(1 - std::exp(-1.0))));

  BenchmarkCase lq = find_case("lq1d");
  double x1[1] = {1.0};
  CHECK(reference_value(lq, x1, 5.0) == doctest::Approx(-0.49995).epsilon(1e-4));

  BenchmarkCase d2 = find_case("dist2d");
  double origin[2] = {0.0, 0.0};
  CHECK(reference_value(d2, origin, 1.0) == doctest::Approx(-1.0));

  BenchmarkCase rot = find_case("rotation");
  double e1[2] = {1.0, 0.0};
  CHECK(reference_value(rot, e1, 0.0) == doctest::Approx(-0.5));

  CHECK_THROWS_AS(reference_value(lq, std::vector<double>{7.0}, 1.0), std::out_of_range);
  CHECK_THROWS_AS(reference_value(lq, x1, 6.0), std::out_of_range);
  CHECK_THROWS_AS(find_case("nope"), std::invalid_argument);
}

TEST_CASE("every reference starts from the terminal reward") {
  for (const auto& bc : benchmark_catalog()) {
    for (int trial = 0; trial < 20; ++trial) {
      auto x = random_interior_point(bc.problem.domain);
      CHECK(bc.reference(x, 0.0) ==
            doctest::Approx(bc.problem.terminal_reward(x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("closed-form Hamiltonians match the brute-force sup over controls") {
  for (const auto& bc : benchmark_catalog()) {
    REQUIRE(bc.model.has_value());
    const int n = bc.problem.domain.dim();
    // the control lattice step stays 1e-3; sample counts shrink with the
    // lattice size to keep the scan affordable
    double lattice = 1;
    for (int k = 0; k < bc.model->controls.dim(); ++k)
      lattice *= std::floor((bc.model->controls.hi[k] - bc.model->controls.lo[k]) / 1e-3) + 1;
    int samples = static_cast<int>(std::clamp(2e8 / lattice, 3.0, 200.0));
    for (int trial = 0; trial < samples; ++trial) {
      auto x = random_interior_point(bc.problem.domain);
      std::vector<double> p(n);
      for (int k = 0; k < n; ++k) p[k] = urand(-3, 3);
      double pn = 0;
      for (double v : p) pn += v * v;
      pn = std::sqrt(pn);
      double closed = hamiltonian_eval(bc.problem, x, p);
      double brute = brute_hamiltonian(*bc.model, x, p, 1e-3);
      CHECK(std::abs(closed - brute) <= 1e-3 * (1 + pn));
    }
  }
}

TEST_CASE("scalar Riccati flow reproduces tanh") {
  RiccatiEvaluator ev =
      riccati_reference(SmallMatrix::zero(1, 1), SmallMatrix::diag({1}),
                        SmallMatrix::diag({1}), SmallMatrix::diag({1}),
                        SmallMatrix::zero(1, 1), 5.0, 1000);
  double one[1] = {1.0};
  CHECK(ev.value(one, 5.0) == doctest::Approx(-0.5 * std::tanh(5.0)).epsilon(1e-8));
  CHECK(ev.value(one, 0.0) == 0.0);  // P(0) = Qf exactly
  CHECK(ev.value(one, 2.0) == doctest::Approx(-0.5 * std::tanh(2.0)).epsilon(1e-8));
}

TEST_CASE("Riccati integrator validates inputs") {
  CHECK_THROWS_AS(riccati_reference(SmallMatrix::zero(1, 1), SmallMatrix::diag({1}),
                                    SmallMatrix::diag({1}), SmallMatrix::diag({1}),
                                    SmallMatrix::zero(1, 1), 1.0, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(riccati_reference(SmallMatrix::zero(1, 1), SmallMatrix::diag({1}),
                                    SmallMatrix::diag({1}), SmallMatrix::diag({-1}),
                                    SmallMatrix::zero(1, 1), 1.0, 1000),
                  std::invalid_argument);
}

TEST_CASE("planar Riccati reference is step-halving consistent") {
  SmallMatrix A{2, 2, {0, 1, 0, 0}}, B{2, 1, {0, 1}};
  SmallMatrix Q = SmallMatrix::diag({2, 0});
  SmallMatrix R = SmallMatrix::diag({1});
  SmallMatrix Qf = SmallMatrix::diag({2, 4});
  RiccatiEvaluator coarse = riccati_reference(A, B, Q, R, Qf, 1.0, 1000);
  RiccatiEvaluator fine = riccati_reference(A, B, Q, R, Qf, 1.0, 2000);
  double x[2] = {1.0, 1.0};
  CHECK(std::abs(coarse.value(x, 1.0) - fine.value(x, 1.0)) <= 1e-6);
  CHECK(coarse.value(x, 0.0) == -3.0);  // -1/2 (2 + 4)
}

TEST_CASE("scalar semigroup flow of quadratics matches its closed form") {
  QuadraticCoeffs c0{1.0, 1.0, -0.5};  // the unit-Hessian element centered at 1
  QuadraticCoeffs c = lq1d_semigroup_flow(c0, 0.3, 1000);
  CHECK(c.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.b == doctest::Approx(std::exp(-0.3)).epsilon(1e-10));
  CHECK(c.d == doctest::Approx(-0.5 + (1 - std::exp(-0.6)) / 4).epsilon(1e-10));
  CHECK_THROWS_AS(lq1d_semigroup_flow(c0, 0.3, 0), std::invalid_argument);
}

TEST_CASE("error metric on exact and offset samplings") {
  BenchmarkCase lq = find_case("lq1d");
  PointList grid = regular_grid(lq.window, 0.1);
  GridFunction exact = sample_on_grid(
      [&](std::span<const double> x) { return lq.reference(x, 5.0); }, grid);
  CHECK(linf_error(exact, lq, 5.0) == 0.0);
  for (double& v : exact.values) v += 0.125;
  CHECK(linf_error(exact, lq, 5.0) == doctest::Approx(0.125));
}

TEST_CASE("a single time step yields one row and no slope") {
  BenchmarkCase lq = find_case("lq1d");
  ConvergenceTable t =
      convergence_study(lq, {0.5}, StiffnessVariant::k_tilde, 1.0);
  REQUIRE(t.rows.size() == 1);
  CHECK(!t.slope.has_value());
  CHECK(t.rows[0].dx == doctest::Approx(std::pow(0.5, 1.5)));
}
