#pragma once

// P1/P2 finite-element function families, evaluation and gradients, and the
// exact concave maximization engine for sups of element pairs over boxes.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpfem/tropical.hpp"

namespace mpfem {

struct BoxDomain {
  std::vector<double> lo, hi;

  BoxDomain() = default;
  BoxDomain(std::vector<double> l, std::vector<double> h)
      : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size())
      throw std::invalid_argument("BoxDomain: lo/hi dimension mismatch");
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (lo[k] > hi[k]) throw std::invalid_argument("BoxDomain: lo > hi");
  }
  static BoxDomain interval(double a, double b) { return BoxDomain({a}, {b}); }
  static BoxDomain cube(int dim, double a, double b) {
    return BoxDomain(std::vector<double>(dim, a), std::vector<double>(dim, b));
  }

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(std::span<const double> x, double tol = 0.0) const {
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
    return true;
  }
  bool on_boundary(std::span<const double> x, double tol) const {
    if (!contains(x, tol)) return false;
    for (int k = 0; k < dim(); ++k)
      if (std::abs(x[k] - lo[k]) <= tol || std::abs(x[k] - hi[k]) <= tol) return true;
    return false;
  }
  /// Componentwise enlargement by r, the box analogue of a ball enlargement.
  BoxDomain enlarged(double r) const {
    BoxDomain b = *this;
    for (int k = 0; k < dim(); ++k) {
      b.lo[k] -= r;
      b.hi[k] += r;
    }
    return b;
  }
  double diameter() const {
    double s = 0;
    for (int k = 0; k < dim(); ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    return std::sqrt(s);
  }
};

enum class ElementKind { quadratic, lipschitz };

/// One max-plus basis function: either the quadratic element
/// w(x) = -(c/2) |x - xhat|_2^2 or the Lipschitz element z(x) = -a |x - xhat|_1.
struct BasisFunction {
  ElementKind kind;
  double param;  // Hessian c or slope a, both > 0
  std::vector<double> center;

  double value(std::span<const double> x) const {
    double s = 0;
    if (kind == ElementKind::quadratic) {
      for (std::size_t k = 0; k < center.size(); ++k) {
        double d = x[k] - center[k];
        s += d * d;
      }
      return -0.5 * param * s;
    }
    for (std::size_t k = 0; k < center.size(); ++k) s += std::abs(x[k] - center[k]);
    return -param * s;
  }

  /// Gradient -c (x - xhat); only quadratic elements are differentiable.
  std::vector<double> gradient(std::span<const double> x) const {
    if (kind != ElementKind::quadratic)
      throw std::logic_error("gradient: Lipschitz element is not differentiable");
    std::vector<double> g(center.size());
    for (std::size_t k = 0; k < center.size(); ++k) g[k] = -param * (x[k] - center[k]);
    return g;
  }
};

inline BasisFunction quadratic_element(std::vector<double> center, double hessian) {
  if (hessian <= 0) throw std::invalid_argument("quadratic_element: hessian must be > 0");
  return {ElementKind::quadratic, hessian, std::move(center)};
}
inline BasisFunction lipschitz_element(std::vector<double> center, double slope) {
  if (slope <= 0) throw std::invalid_argument("lipschitz_element: slope must be > 0");
  return {ElementKind::lipschitz, slope, std::move(center)};
}

/// A finite family of elements of one kind sharing a parameter, centers stored
/// flat (count x dim, row-major).
struct BasisFamily {
  ElementKind kind = ElementKind::quadratic;
  double param = 1.0;
  int dim = 1;
  std::vector<double> centers;

  int count() const { return static_cast<int>(centers.size()) / dim; }
  std::span<const double> center(int i) const {
    return {centers.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  BasisFunction element(int i) const {
    auto c = center(i);
    return {kind, param, std::vector<double>(c.begin(), c.end())};
  }
  double value(int i, std::span<const double> x) const {
    auto c = center(i);
    double s = 0;
    if (kind == ElementKind::quadratic) {
      for (int k = 0; k < dim; ++k) {
        double d = x[k] - c[k];
        s += d * d;
      }
      return -0.5 * param * s;
    }
    for (int k = 0; k < dim; ++k) s += std::abs(x[k] - c[k]);
    return -param * s;
  }
};

inline BasisFamily make_family(ElementKind kind, double param,
                               const std::vector<std::vector<double>>& centers) {
  if (centers.empty()) throw std::invalid_argument("make_family: no centers");
  BasisFamily f;
  f.kind = kind;
  f.param = param;
  f.dim = static_cast<int>(centers.front().size());
  f.centers.reserve(centers.size() * f.dim);
  for (const auto& c : centers) f.centers.insert(f.centers.end(), c.begin(), c.end());
  return f;
}

struct SupResult {
  double value;
  std::vector<double> argmax;
};

namespace detail {

inline double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

inline double pair_value_1d(ElementKind k1, double p1, double c1, ElementKind k2,
                            double p2, double c2, double x) {
  double v = 0;
  if (k1 == ElementKind::quadratic)
    v -= 0.5 * p1 * (x - c1) * (x - c1);
  else
    v -= p1 * std::abs(x - c1);
  if (k2 == ElementKind::quadratic)
    v -= 0.5 * p2 * (x - c2) * (x - c2);
  else
    v -= p2 * std::abs(x - c2);
  return v;
}

// Maximizer of the 1D concave objective over [lo, hi].
//
// quad+quad: stationary point is the p-weighted mean of the centers.
// quad+lip:  soft threshold; moving from the Lipschitz center toward the
//            quadratic center, the slope of the quadratic part must exceed the
//            Lipschitz slope, giving x* = cl + shrink(cq - cl, a/c).
// lip+lip:   piecewise linear, so the max over the interval sits at a kink or
//            an endpoint; ties break toward the smallest point.
inline double pair_argmax_1d(ElementKind k1, double p1, double c1, ElementKind k2,
                             double p2, double c2, double lo, double hi) {
  if (k1 == ElementKind::quadratic && k2 == ElementKind::quadratic)
    return clamp((p1 * c1 + p2 * c2) / (p1 + p2), lo, hi);
  if (k1 != k2) {
    double cq = (k1 == ElementKind::quadratic) ? c1 : c2;
    double cl = (k1 == ElementKind::quadratic) ? c2 : c1;
    double c = (k1 == ElementKind::quadratic) ? p1 : p2;
    double a = (k1 == ElementKind::quadratic) ? p2 : p1;
    double t = cq - cl;
    double shrunk = (std::abs(t) <= a / c) ? 0.0 : t - std::copysign(a / c, t);
    return clamp(cl + shrunk, lo, hi);
  }
  std::array<double, 4> cand = {clamp(c1, lo, hi), clamp(c2, lo, hi), lo, hi};
  std::sort(cand.begin(), cand.end());
  double best_x = cand[0];
  double best_v = pair_value_1d(k1, p1, c1, k2, p2, c2, cand[0]);
  for (int i = 1; i < 4; ++i) {
    double v = pair_value_1d(k1, p1, c1, k2, p2, c2, cand[i]);
    if (v > best_v) {
      best_v = v;
      best_x = cand[i];
    }
  }
  return best_x;
}

}  // namespace detail

/// Argmax of z(x) + w(x) over the box, computed coordinatewise in closed form.
inline void pairwise_argmax_into(const BasisFamily& Z, int j, const BasisFamily& W,
                                 int i, const BoxDomain& X, double* out) {
  auto cz = Z.center(j);
  auto cw = W.center(i);
  for (int k = 0; k < X.dim(); ++k)
    out[k] = detail::pair_argmax_1d(Z.kind, Z.param, cz[k], W.kind, W.param, cw[k],
                                    X.lo[k], X.hi[k]);
}

/// sup_{x in X} z(x) + w(x) together with a maximizing point. Both families
/// are coordinate-separable, so the n-dimensional sup splits per coordinate;
/// a non-singleton maximizer set (two P1 elements) resolves to the
/// lexicographically smallest maximizer.
inline SupResult pairwise_sup(const BasisFamily& Z, int j, const BasisFamily& W, int i,
                              const BoxDomain& X) {
  SupResult r;
  r.argmax.resize(X.dim());
  pairwise_argmax_into(Z, j, W, i, X, r.argmax.data());
  r.value = Z.value(j, r.argmax) + W.value(i, r.argmax);
  return r;
}

inline SupResult pairwise_sup(const BasisFunction& z, const BasisFunction& w,
                              const BoxDomain& X) {
  BasisFamily Z{z.kind, z.param, X.dim(), z.center};
  BasisFamily W{w.kind, w.param, X.dim(), w.center};
  return pairwise_sup(Z, 0, W, 0, X);
}

/// Multi-start lattice search with per-coordinate golden-section refinement.
/// Exact only for objectives concave per start basin; otherwise best effort.
/// `seeds` adds extra refinement starts beyond the best lattice points.
inline SupResult sampled_sup(const std::function<double(std::span<const double>)>& f,
                             const BoxDomain& X, double coarse_step, double refine_tol,
                             const std::vector<std::vector<double>>& seeds = {}) {
  if (coarse_step <= 0) throw std::invalid_argument("sampled_sup: coarse_step must be > 0");
  const int n = X.dim();
  std::vector<int> counts(n);
  for (int k = 0; k < n; ++k) {
    double extent = X.hi[k] - X.lo[k];
    if (extent > 0 && coarse_step > extent)
      throw std::invalid_argument("sampled_sup: coarse_step exceeds domain extent");
    counts[k] = std::max(1, static_cast<int>(std::floor(extent / coarse_step)) + 1);
  }

  // Coarse scan, keeping the 5 best lattice points; ties keep the earlier
  // (lexicographically smaller) point.
  struct Start {
    double value;
    std::vector<double> x;
  };
  std::vector<Start> best;
  std::vector<int> idx(n, 0);
  std::vector<double> x(n);
  bool done = false;
  while (!done) {
    for (int k = 0; k < n; ++k)
      x[k] = (counts[k] == 1) ? X.lo[k]
                              : std::min(X.lo[k] + idx[k] * coarse_step, X.hi[k]);
    double v = f(x);
    if (best.size() < 5 || v > best.back().value) {
      auto pos = std::find_if(best.begin(), best.end(),
                              [&](const Start& s) { return v > s.value; });
      best.insert(pos, {v, x});
      if (best.size() > 5) best.pop_back();
    }
    done = true;
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] < counts[k]) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
  }
  for (const auto& s : seeds) best.push_back({f(s), s});

  constexpr double invphi = 0.6180339887498949;
  SupResult out{neg_inf, {}};
  for (auto& s : best) {
    std::vector<double> p = s.x;
    double fp = s.value;
    for (int sweep = 0; sweep < 60; ++sweep) {
      double moved = 0;
      for (int k = 0; k < n; ++k) {
        double a = std::max(X.lo[k], p[k] - coarse_step);
        double b = std::min(X.hi[k], p[k] + coarse_step);
        double orig = p[k];
        // golden section on coordinate k
        double c1 = b - invphi * (b - a);
        double c2 = a + invphi * (b - a);
        p[k] = c1;
        double f1 = f(p);
        p[k] = c2;
        double f2 = f(p);
        while (b - a > refine_tol) {
          if (f1 >= f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - invphi * (b - a);
            p[k] = c1;
            f1 = f(p);
          } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + invphi * (b - a);
            p[k] = c2;
            f2 = f(p);
          }
        }
        double xm = 0.5 * (a + b);
        p[k] = xm;
        double fm = f(p);
        if (fm >= fp) {
          fp = fm;
        } else {
          p[k] = orig;  // keep previous coordinate if refinement lost ground
        }
        moved = std::max(moved, std::abs(p[k] - orig));
      }
      fp = f(p);
      if (moved < refine_tol) break;
    }
    if (fp > out.value) {
      out.value = fp;
      out.argmax = p;
    }
  }
  return out;
}

}  // namespace mpfem
