#pragma once

// Benchmark catalog: control problems with closed-form Hamiltonians and
// reference value functions, a Riccati ODE oracle for the linear quadratic
// cases, error metrics, and convergence studies.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpfem/solver.hpp"

namespace mpfem {

// ---------------------------------------------------------------------------
// Small dense matrices for the Riccati integrator.

struct SmallMatrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  static SmallMatrix zero(int r, int c) { return {r, c, std::vector<double>(r * c, 0.0)}; }
  static SmallMatrix diag(std::vector<double> d) {
    SmallMatrix m = zero(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (int i = 0; i < m.rows; ++i) m.at(i, i) = d[i];
    return m;
  }
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

namespace detail {

inline SmallMatrix mat_mul(const SmallMatrix& x, const SmallMatrix& y) {
  SmallMatrix r = SmallMatrix::zero(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      double v = x.at(i, k);
      if (v == 0) continue;
      for (int j = 0; j < y.cols; ++j) r.at(i, j) += v * y.at(k, j);
    }
  return r;
}

inline SmallMatrix mat_transpose(const SmallMatrix& x) {
  SmallMatrix r = SmallMatrix::zero(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r.at(j, i) = x.at(i, j);
  return r;
}

inline void mat_axpy(SmallMatrix& y, double s, const SmallMatrix& x) {
  for (std::size_t k = 0; k < y.a.size(); ++k) y.a[k] += s * x.a[k];
}

/// Throws if m is not symmetric positive definite.
inline void check_spd(const SmallMatrix& m) {
  const int n = m.rows;
  SmallMatrix L = SmallMatrix::zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-12)
        throw std::invalid_argument("riccati_reference: R must be symmetric");
      double s = m.at(i, j);
      for (int k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
      if (i == j) {
        if (s <= 0) throw std::invalid_argument("riccati_reference: R must be positive definite");
        L.at(i, i) = std::sqrt(s);
      } else {
        L.at(i, j) = s / L.at(j, j);
      }
    }
  }
}

/// Gauss-Jordan inverse with partial pivoting; inputs are tiny (<= 2x2 here).
inline SmallMatrix mat_inverse(const SmallMatrix& m) {
  const int n = m.rows;
  SmallMatrix a = m;
  SmallMatrix inv = SmallMatrix::diag(std::vector<double>(n, 1.0));
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
    if (a.at(piv, col) == 0) throw std::invalid_argument("mat_inverse: singular matrix");
    for (int j = 0; j < n; ++j) {
      std::swap(a.at(col, j), a.at(piv, j));
      std::swap(inv.at(col, j), inv.at(piv, j));
    }
    double d = a.at(col, col);
    for (int j = 0; j < n; ++j) {
      a.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a.at(r, col);
      if (f == 0) continue;
      for (int j = 0; j < n; ++j) {
        a.at(r, j) -= f * a.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

}  // namespace detail

/// Quadratic-form reference v(x,t) = -1/2 x' P(t) x, with P integrated from
/// P(0) = Qf along dP/dt = Q + A'P + PA - P S P, S = B R^{-1} B', by classical
/// fixed-step RK4. Here t counts time to go, so v(.,0) is the terminal reward.
struct RiccatiEvaluator {
  double horizon = 0;
  int n = 0;
  std::vector<SmallMatrix> P;  // steps+1 snapshots, uniform in t

  double value(std::span<const double> x, double t) const {
    if (t < -1e-12 || t > horizon + 1e-12)
      throw std::out_of_range("riccati reference: t outside [0, T]");
    const int steps = static_cast<int>(P.size()) - 1;
    double s = std::clamp(t / horizon, 0.0, 1.0) * steps;
    int k = std::min(static_cast<int>(s), steps - 1);
    double w = s - k;
    double v = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        v += x[i] * ((1 - w) * P[k].at(i, j) + w * P[k + 1].at(i, j)) * x[j];
    return -0.5 * v;
  }
};

inline RiccatiEvaluator riccati_reference(const SmallMatrix& A, const SmallMatrix& B,
                                          const SmallMatrix& Q, const SmallMatrix& R,
                                          const SmallMatrix& Qf, double T, int steps) {
  if (steps < 100) throw std::invalid_argument("riccati_reference: steps must be >= 100");
  detail::check_spd(R);
  SmallMatrix At = detail::mat_transpose(A);
  SmallMatrix S = detail::mat_mul(detail::mat_mul(B, detail::mat_inverse(R)),
                                  detail::mat_transpose(B));
  auto rhs = [&](const SmallMatrix& P) {
    SmallMatrix d = Q;
    detail::mat_axpy(d, 1.0, detail::mat_mul(At, P));
    detail::mat_axpy(d, 1.0, detail::mat_mul(P, A));
    detail::mat_axpy(d, -1.0, detail::mat_mul(detail::mat_mul(P, S), P));
    return d;
  };
  RiccatiEvaluator ev;
  ev.horizon = T;
  ev.n = A.rows;
  ev.P.reserve(steps + 1);
  ev.P.push_back(Qf);
  const double h = T / steps;
  SmallMatrix P = Qf;
  for (int s = 0; s < steps; ++s) {
    SmallMatrix k1 = rhs(P);
    SmallMatrix p2 = P;
    detail::mat_axpy(p2, h / 2, k1);
    SmallMatrix k2 = rhs(p2);
    SmallMatrix p3 = P;
    detail::mat_axpy(p3, h / 2, k2);
    SmallMatrix k3 = rhs(p3);
    SmallMatrix p4 = P;
    detail::mat_axpy(p4, h, k3);
    SmallMatrix k4 = rhs(p4);
    detail::mat_axpy(P, h / 6, k1);
    detail::mat_axpy(P, h / 3, k2);
    detail::mat_axpy(P, h / 3, k3);
    detail::mat_axpy(P, h / 6, k4);
    ev.P.push_back(P);
  }
  return ev;
}

/// Exact flow of a quadratic -a/2 x^2 + b x + d under the scalar LQ semigroup
/// (H = -x^2/2 + p^2/2): da/dt = 1 - a^2, db/dt = -a b, dd/dt = b^2 / 2.
/// Classical RK4, fixed step. Returns the coefficients after time t.
struct QuadraticCoeffs {
  double a = 0, b = 0, d = 0;

  double value(double x) const { return -0.5 * a * x * x + b * x + d; }
};

inline QuadraticCoeffs lq1d_semigroup_flow(QuadraticCoeffs c0, double t, int steps) {
  if (steps < 1) throw std::invalid_argument("lq1d_semigroup_flow: steps must be >= 1");
  auto rhs = [](QuadraticCoeffs c) {
    return QuadraticCoeffs{1 - c.a * c.a, -c.a * c.b, 0.5 * c.b * c.b};
  };
  auto axpy = [](QuadraticCoeffs y, double s, QuadraticCoeffs x) {
    return QuadraticCoeffs{y.a + s * x.a, y.b + s * x.b, y.d + s * x.d};
  };
  const double h = t / steps;
  QuadraticCoeffs c = c0;
  for (int s = 0; s < steps; ++s) {
    auto k1 = rhs(c);
    auto k2 = rhs(axpy(c, h / 2, k1));
    auto k3 = rhs(axpy(c, h / 2, k2));
    auto k4 = rhs(axpy(c, h, k3));
    c = axpy(axpy(axpy(axpy(c, h / 6, k1), h / 3, k2), h / 3, k3), h / 6, k4);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Benchmark catalog.

/// Underlying control model (reward l, dynamics f, control set), kept so tests
/// can cross-check the closed-form Hamiltonian against a brute-force sup.
struct ControlModel {
  BoxDomain controls;
  std::function<double(std::span<const double> x, std::span<const double> u)> running_reward;
  std::function<void(std::span<const double> x, std::span<const double> u,
                     std::span<double> out)> dynamics;
};

struct BenchmarkCase {
  std::string name;
  ControlProblem problem;
  ElementKind w_kind = ElementKind::quadratic;
  ElementKind z_kind = ElementKind::lipschitz;
  double w_param = 1;      // Hessian c of the trial elements
  double z_param = 1;      // Lipschitz constant a, or Hessian of quadratic tests
  BoxDomain w_box, z_box;  // lattices of element / test centers
  double z_step_factor = 1;  // test lattice step = dx * factor
  BoxDomain window;          // where the reported error is measured
  double window_step = 0.01;
  double delta = 0.1, dx = 0.1;  // recommended discretization
  std::function<double(std::span<const double> x, double t)> reference;  // v(x,t), t = time to go
  std::optional<ControlModel> model;
};

inline double reference_value(const BenchmarkCase& bc, std::span<const double> x, double t) {
  if (!bc.problem.domain.contains(x, 1e-12))
    throw std::out_of_range("reference_value: x outside the domain");
  if (t < -1e-12 || t > bc.problem.horizon + 1e-12)
    throw std::out_of_range("reference_value: t outside [0, T]");
  return bc.reference(x, t);
}

namespace detail {

inline ScalarField zero_field() {
  return [](std::span<const double>) { return 0.0; };
}

inline BenchmarkCase make_falcone1() {
  BenchmarkCase bc;
  bc.name = "falcone1";
  bc.problem.domain = BoxDomain::interval(-1, 1);
  bc.problem.element_domain = BoxDomain::interval(-2, 2);
  bc.problem.horizon = 1;
  bc.problem.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return x[0] + std::max(0.0, -x[0] * p[0]);
  };
  bc.problem.terminal_reward = zero_field();
  bc.problem.lipschitz_L = 1;
  bc.problem.semiconvexity_c = 1;
  bc.w_param = 1;
  bc.z_param = 1.5;
  bc.w_box = BoxDomain::interval(-2, 2);
  bc.z_box = BoxDomain::interval(-1, 1);
  bc.window = BoxDomain::interval(-1, 1);
  bc.window_step = 0.005;
  bc.delta = 0.01;
  bc.dx = 0.005;
  bc.reference = [](std::span<const double> x, double t) {
    return x[0] > 0 ? x[0] * t : x[0] * (1 - std::exp(-t));
  };
  ControlModel m;
  m.controls = BoxDomain::interval(0, 1);
  m.running_reward = [](std::span<const double> x, std::span<const double>) { return x[0]; };
  m.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> out) {
    out[0] = -x[0] * u[0];
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_falcone2() {
  BenchmarkCase bc;
  bc.name = "falcone2";
  bc.problem.domain = BoxDomain::interval(-1, 1);
  bc.problem.element_domain = BoxDomain::interval(-1.375, 1.375);
  bc.problem.horizon = 1;
  bc.problem.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return (1 - std::abs(x[0])) * (std::abs(p[0]) - 3);
  };
  bc.problem.terminal_reward = zero_field();
  bc.problem.lipschitz_L = 3;
  bc.problem.semiconvexity_c = 8;
  bc.w_param = 8;
  bc.z_param = 2;
  bc.w_box = BoxDomain::interval(-1.375, 1.375);
  bc.z_box = BoxDomain::interval(-1, 1);
  bc.window = BoxDomain::interval(-1, 1);
  bc.window_step = 0.005;
  bc.delta = 0.02;
  bc.dx = 0.01;
  bc.reference = [](std::span<const double> x, double t) {
    return -3 * (1 - std::abs(x[0])) * (1 - std::exp(-t));
  };
  ControlModel m;
  m.controls = BoxDomain::interval(-1, 1);
  m.running_reward = [](std::span<const double> x, std::span<const double>) {
    return -3 * (1 - std::abs(x[0]));
  };
  m.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> out) {
    out[0] = u[0] * (1 - std::abs(x[0]));
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_lq1d() {
  BenchmarkCase bc;
  bc.name = "lq1d";
  bc.problem.domain = BoxDomain::interval(-5, 5);
  bc.problem.element_domain = BoxDomain::interval(-6, 6);
  bc.problem.horizon = 5;
  bc.problem.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return 0.5 * (p[0] * p[0] - x[0] * x[0]);
  };
  bc.problem.terminal_reward = zero_field();
  bc.problem.lipschitz_L = 1;
  bc.problem.semiconvexity_c = 1;
  bc.z_kind = ElementKind::quadratic;
  bc.w_param = 1;
  bc.z_param = 1;
  bc.w_box = BoxDomain::interval(-6, 6);
  bc.z_box = BoxDomain::interval(-6, 6);
  bc.window = BoxDomain::interval(-1, 1);
  bc.window_step = 0.01;
  bc.delta = 0.5;
  bc.dx = 0.05;
  bc.reference = [](std::span<const double> x, double t) {
    return -0.5 * std::tanh(t) * x[0] * x[0];
  };
  ControlModel m;
  m.controls = BoxDomain::interval(-4, 4);
  m.running_reward = [](std::span<const double> x, std::span<const double> u) {
    return -0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  m.dynamics = [](std::span<const double>, std::span<const double> u, std::span<double> out) {
    out[0] = u[0];
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_dist1d(bool quadratic_tests) {
  BenchmarkCase bc;
  bc.name = quadratic_tests ? "dist1d_bad" : "dist1d";
  bc.problem.domain = BoxDomain::interval(-1, 1);
  bc.problem.element_domain = BoxDomain::interval(-1.5, 1.5);
  bc.problem.horizon = 1;
  bc.problem.hamiltonian = [](std::span<const double>, std::span<const double> p) {
    return std::abs(p[0]) - 1;
  };
  bc.problem.terminal_reward = zero_field();
  bc.problem.absorbing_boundary = true;
  bc.problem.lipschitz_L = 1;
  bc.problem.semiconvexity_c = 2;
  bc.w_param = 2;
  bc.w_box = BoxDomain::interval(-1.5, 1.5);
  if (quadratic_tests) {
    bc.z_kind = ElementKind::quadratic;
    bc.z_param = 2;
    bc.z_box = BoxDomain::interval(-1.5, 1.5);
  } else {
    bc.z_param = 1.1;
    bc.z_box = BoxDomain::interval(-1, 1);
  }
  bc.window = BoxDomain::interval(-1, 1);
  bc.window_step = 0.005;
  bc.delta = 0.02;
  bc.dx = 0.01;
  bc.reference = [](std::span<const double> x, double t) {
    return std::max(-t, std::abs(x[0]) - 1);
  };
  ControlModel m;
  m.controls = BoxDomain::interval(-1, 1);
  m.running_reward = [](std::span<const double> x, std::span<const double>) {
    return (std::abs(std::abs(x[0]) - 1) <= 1e-12) ? 0.0 : -1.0;
  };
  m.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> out) {
    out[0] = (std::abs(std::abs(x[0]) - 1) <= 1e-12) ? 0.0 : u[0];
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_lq2d() {
  BenchmarkCase bc;
  bc.name = "lq2d";
  bc.problem.domain = BoxDomain::cube(2, -5, 5);
  bc.problem.element_domain = BoxDomain::cube(2, -6, 6);
  bc.problem.horizon = 5;
  bc.problem.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return 0.5 * (p[0] * p[0] + p[1] * p[1] - x[0] * x[0] - x[1] * x[1]);
  };
  bc.problem.terminal_reward = zero_field();
  bc.problem.lipschitz_L = 1;
  bc.problem.semiconvexity_c = 1;
  bc.z_kind = ElementKind::quadratic;
  bc.w_param = 1;
  bc.z_param = 1;
  bc.w_box = BoxDomain::cube(2, -6, 6);
  bc.z_box = BoxDomain::cube(2, -6, 6);
  bc.window = BoxDomain::cube(2, -1, 1);
  bc.window_step = 0.05;
  bc.delta = 0.5;
  bc.dx = 0.25;
  bc.reference = [](std::span<const double> x, double t) {
    return -0.5 * std::tanh(t) * (x[0] * x[0] + x[1] * x[1]);
  };
  ControlModel m;
  m.controls = BoxDomain::cube(2, -4, 4);
  m.running_reward = [](std::span<const double> x, std::span<const double> u) {
    return -0.5 * (x[0] * x[0] + x[1] * x[1] + u[0] * u[0] + u[1] * u[1]);
  };
  m.dynamics = [](std::span<const double>, std::span<const double> u, std::span<double> out) {
    out[0] = u[0];
    out[1] = u[1];
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_dist2d() {
  BenchmarkCase bc;
  bc.name = "dist2d";
  bc.problem.domain = BoxDomain::cube(2, -1, 1);
  bc.problem.element_domain = BoxDomain::cube(2, -3, 3);
  bc.problem.horizon = 1;
  bc.problem.hamiltonian = [](std::span<const double>, std::span<const double> p) {
    return std::abs(p[0]) + std::abs(p[1]) - 1;
  };
  bc.problem.terminal_reward = zero_field();
  bc.problem.absorbing_boundary = true;
  bc.problem.lipschitz_L = 1;
  bc.problem.semiconvexity_c = 1;
  bc.w_param = 1;
  bc.z_param = 3;
  bc.w_box = BoxDomain::cube(2, -3, 3);
  bc.z_box = BoxDomain::cube(2, -1, 1);
  bc.window = BoxDomain::cube(2, -1, 1);
  bc.window_step = 0.05;
  bc.delta = 0.1;
  bc.dx = 0.1;
  bc.reference = [](std::span<const double> x, double t) {
    return std::max(-t, std::max(std::abs(x[0]), std::abs(x[1])) - 1);
  };
  ControlModel m;
  m.controls = BoxDomain::cube(2, -1, 1);
  m.running_reward = [](std::span<const double> x, std::span<const double>) {
    double b = std::max(std::abs(x[0]), std::abs(x[1]));
    return (std::abs(b - 1) <= 1e-12) ? 0.0 : -1.0;
  };
  m.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> out) {
    double b = std::max(std::abs(x[0]), std::abs(x[1]));
    bool frozen = std::abs(b - 1) <= 1e-12;
    out[0] = frozen ? 0.0 : u[0];
    out[1] = frozen ? 0.0 : u[1];
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_rotation() {
  BenchmarkCase bc;
  bc.name = "rotation";
  // the square is not invariant under the rotation, so the sup domain is kept
  // well clear of the reporting window to contain boundary effects
  bc.problem.domain = BoxDomain::cube(2, -2, 2);
  bc.problem.element_domain = BoxDomain::cube(2, -2.5, 2.5);
  bc.problem.horizon = 1;
  bc.problem.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return -p[0] * x[1] + p[1] * x[0];
  };
  bc.problem.terminal_reward = [](std::span<const double> x) {
    return -0.5 * x[0] * x[0] - 1.5 * x[1] * x[1];
  };
  bc.problem.lipschitz_L = 3;
  bc.problem.semiconvexity_c = 4;
  bc.z_kind = ElementKind::quadratic;
  bc.w_param = 4;
  bc.z_param = 3;
  bc.w_box = BoxDomain::cube(2, -2.5, 2.5);
  bc.z_box = BoxDomain::cube(2, -2.5, 2.5);
  const double r = std::sqrt(0.5);  // inscribed box of the unit disc
  bc.window = BoxDomain::cube(2, -r, r);
  bc.window_step = 0.05;
  bc.delta = 0.05;
  bc.dx = 0.05;
  bc.reference = [](std::span<const double> x, double t) {
    double y1 = -x[1] * std::sin(t) + x[0] * std::cos(t);
    double y2 = x[1] * std::cos(t) + x[0] * std::sin(t);
    return -0.5 * y1 * y1 - 1.5 * y2 * y2;
  };
  ControlModel m;
  m.controls = BoxDomain::cube(2, 0, 0);  // singleton control set
  m.running_reward = [](std::span<const double>, std::span<const double>) { return 0.0; };
  m.dynamics = [](std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = -x[1];
    out[1] = x[0];
  };
  bc.model = m;
  return bc;
}

inline BenchmarkCase make_riccati2d() {
  BenchmarkCase bc;
  bc.name = "riccati2d";
  bc.problem.domain = BoxDomain::cube(2, -2, 2);
  bc.problem.element_domain = BoxDomain::cube(2, -2, 2);
  bc.problem.horizon = 1;
  bc.problem.hamiltonian = [](std::span<const double> x, std::span<const double> p) {
    return -x[0] * x[0] + p[0] * x[1] + 0.5 * p[1] * p[1];
  };
  bc.problem.terminal_reward = [](std::span<const double> x) {
    return -x[0] * x[0] - 2 * x[1] * x[1];
  };
  bc.problem.lipschitz_L = 10;
  bc.problem.semiconvexity_c = 10;
  bc.z_kind = ElementKind::quadratic;
  bc.w_param = 10;
  bc.z_param = 1;
  bc.w_box = BoxDomain::cube(2, -2, 2);
  bc.z_box = BoxDomain::cube(2, -11, 11);
  bc.z_step_factor = 4;
  bc.window = BoxDomain::cube(2, -1, 1);
  bc.window_step = 0.05;
  bc.delta = 0.05;
  bc.dx = 0.05;
  auto ev = std::make_shared<RiccatiEvaluator>(riccati_reference(
      SmallMatrix{2, 2, {0, 1, 0, 0}}, SmallMatrix{2, 1, {0, 1}},
      SmallMatrix::diag({2, 0}), SmallMatrix::diag({1}), SmallMatrix::diag({2, 4}),
      1.0, 1000));
  bc.reference = [ev](std::span<const double> x, double t) { return ev->value(x, t); };
  ControlModel m;
  m.controls = BoxDomain::interval(-4, 4);
  m.running_reward = [](std::span<const double> x, std::span<const double> u) {
    return -x[0] * x[0] - 0.5 * u[0] * u[0];
  };
  m.dynamics = [](std::span<const double> x, std::span<const double> u, std::span<double> out) {
    out[0] = x[1];
    out[1] = u[0];
  };
  bc.model = m;
  return bc;
}

}  // namespace detail

inline std::vector<BenchmarkCase> benchmark_catalog() {
  return {detail::make_falcone1(), detail::make_falcone2(), detail::make_lq1d(),
          detail::make_dist1d(false), detail::make_dist1d(true), detail::make_lq2d(),
          detail::make_dist2d(), detail::make_rotation(), detail::make_riccati2d()};
}

inline BenchmarkCase find_case(const std::string& name) {
  for (auto& bc : benchmark_catalog())
    if (bc.name == name) return bc;
  throw std::invalid_argument("unknown benchmark case: " + name);
}

// ---------------------------------------------------------------------------
// Running a case and measuring error.

inline double linf_error(const GridFunction& vh, const BenchmarkCase& bc, double t) {
  double err = 0;
  for (int x = 0; x < vh.grid.count(); ++x)
    err = std::max(err, std::abs(vh.values[x] - bc.reference(vh.grid.point(x), t)));
  return err;
}

struct CaseRunOptions {
  StiffnessVariant variant = StiffnessVariant::k_tilde;
  double cutoff = pos_inf;
  std::optional<double> horizon;  // overrides the case's horizon
  double eval_step = 0;           // residuation grid step; 0 means use dx
  bool keep_history = false;
};

inline RunReport run_case(const BenchmarkCase& bc, double delta, double dx,
                          const CaseRunOptions& opts = {}) {
  ControlProblem prob = bc.problem;
  if (opts.horizon) prob.horizon = *opts.horizon;
  BasisFamily W = family_from_grid(bc.w_kind, bc.w_param, regular_grid(bc.w_box, dx));
  BasisFamily Z =
      family_from_grid(bc.z_kind, bc.z_param, regular_grid(bc.z_box, dx * bc.z_step_factor));
  double es = opts.eval_step > 0 ? opts.eval_step : dx;
  RunGrids grids = make_run_grids(prob.domain, es, bc.window, bc.window_step);
  AssemblyConfig cfg;
  cfg.dt = delta;
  cfg.variant = opts.variant;
  cfg.cutoff_radius = opts.cutoff;
  const double T = prob.horizon;
  std::function<double(std::span<const double>)> ref = [&bc, T](std::span<const double> x) {
    return bc.reference(x, T);
  };
  RunReport rep = run(prob, W, Z, cfg, grids, &ref, opts.keep_history);
  rep.params["dx"] = dx;
  rep.params["T"] = T;
  rep.params["c"] = bc.w_param;
  rep.params["a"] = bc.z_param;
  return rep;
}

inline RunReport fm_run_case(const BenchmarkCase& bc, double delta, double dx,
                             const CaseRunOptions& opts = {}) {
  ControlProblem prob = bc.problem;
  if (opts.horizon) prob.horizon = *opts.horizon;
  BasisFamily W = family_from_grid(bc.w_kind, bc.w_param, regular_grid(bc.w_box, dx));
  double es = opts.eval_step > 0 ? opts.eval_step : dx;
  RunGrids grids = make_run_grids(prob.domain, es, bc.window, bc.window_step);
  AssemblyConfig cfg;
  cfg.dt = delta;
  const double T = prob.horizon;
  std::function<double(std::span<const double>)> ref = [&bc, T](std::span<const double> x) {
    return bc.reference(x, T);
  };
  RunReport rep = fm_run(prob, W, cfg, grids, &ref, opts.keep_history);
  rep.params["dx"] = dx;
  rep.params["T"] = T;
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence study.

struct ConvergenceRow {
  double delta = 0, dx = 0, error = 0, seconds = 0;
};

struct ConvergenceTable {
  std::string case_name;
  std::string variant;
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope;  // of log(error) against log(delta)
};

inline double convergence_dx_rule(StiffnessVariant variant, double delta) {
  return variant == StiffnessVariant::k_h ? delta * delta : std::pow(delta, 1.5);
}

inline ConvergenceTable convergence_study(const BenchmarkCase& bc,
                                          const std::vector<double>& deltas,
                                          StiffnessVariant variant,
                                          std::optional<double> horizon = {}) {
  ConvergenceTable table;
  table.case_name = bc.name;
  table.variant = to_string(variant);
  for (double delta : deltas) {
    CaseRunOptions opts;
    opts.variant = variant;
    opts.horizon = horizon;
    double dx = convergence_dx_rule(variant, delta);
    auto t0 = std::chrono::steady_clock::now();
    RunReport rep = run_case(bc, delta, dx, opts);
    ConvergenceRow row;
    row.delta = delta;
    row.dx = dx;
    row.error = rep.linf_error.value_or(0);
    row.seconds = detail::seconds_since(t0);
    table.rows.push_back(row);
  }
  if (table.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (auto& r : table.rows) {
      if (r.error <= 0) continue;
      double lx = std::log(r.delta), ly = std::log(r.error);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
    if (n >= 2 && n * sxx - sx * sx > 0) table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

inline void dump_convergence_csv(const ConvergenceTable& t, std::ostream& os) {
  os << "delta,dx,error,seconds\n";
  for (auto& r : t.rows)
    os << format_scalar(r.delta) << ',' << format_scalar(r.dx) << ','
       << format_scalar(r.error) << ',' << format_scalar(r.seconds) << '\n';
}

}  // namespace mpfem
