#pragma once

// Complete max-plus scalar arithmetic, tropical vectors and kernel matrices,
// residuation, and the sup-norm semidistance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace mpfem {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// Max-plus multiplication a + b with -inf absorbing, also against +inf.
inline double trop_mul(double a, double b) {
  if (a == neg_inf || b == neg_inf) return neg_inf;
  return a + b;
}

/// Min-plus multiplication a + b with +inf absorbing, also against -inf.
inline double trop_mul_dual(double a, double b) {
  if (a == pos_inf || b == pos_inf) return pos_inf;
  return a + b;
}

using TropicalVector = std::vector<double>;

/// Dense or band-limited kernel matrix over the max-plus semiring. Band
/// storage keeps per-row (column, value) pairs in CSR layout; entries outside
/// the band are -inf. Dense storage and band storage with every finite entry
/// stored produce identical operation results.
class TropicalMatrix {
 public:
  enum class Storage { dense, band };

  TropicalMatrix() = default;

  static TropicalMatrix make_dense(int rows, int cols, double fill = neg_inf) {
    TropicalMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.storage_ = Storage::dense;
    m.dense_.assign(static_cast<std::size_t>(rows) * cols, fill);
    return m;
  }

  /// Band matrices are built row by row, columns appended in increasing order.
  static TropicalMatrix make_band(int rows, int cols, double cutoff_radius) {
    TropicalMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.storage_ = Storage::band;
    m.cutoff_ = cutoff_radius;
    m.row_ptr_.assign(1, 0);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Storage storage() const { return storage_; }
  double cutoff_radius() const { return cutoff_; }
  std::size_t stored_entries() const {
    return storage_ == Storage::dense ? dense_.size() : vals_.size();
  }

  double& dense_at(int j, int i) {
    return dense_[static_cast<std::size_t>(j) * cols_ + i];
  }
  double dense_at(int j, int i) const {
    return dense_[static_cast<std::size_t>(j) * cols_ + i];
  }

  void band_push(int col, double value) {
    cols_idx_.push_back(static_cast<std::uint32_t>(col));
    vals_.push_back(value);
  }
  void band_end_row() { row_ptr_.push_back(static_cast<std::int64_t>(vals_.size())); }

  double at(int j, int i) const {
    if (storage_ == Storage::dense) return dense_at(j, i);
    for (std::int64_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k)
      if (static_cast<int>(cols_idx_[k]) == i) return vals_[k];
    return neg_inf;
  }

  /// Visit the finite entries of one row in column order.
  template <class F>
  void for_each_in_row(int j, F&& f) const {
    if (storage_ == Storage::dense) {
      const double* row = dense_.data() + static_cast<std::size_t>(j) * cols_;
      for (int i = 0; i < cols_; ++i)
        if (row[i] != neg_inf) f(i, row[i]);
    } else {
      for (std::int64_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k)
        f(static_cast<int>(cols_idx_[k]), vals_[k]);
    }
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  Storage storage_ = Storage::dense;
  double cutoff_ = pos_inf;
  std::vector<double> dense_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::uint32_t> cols_idx_;
  std::vector<double> vals_;
};

/// (Ax)_j = max_k (A_jk + x_k).
inline TropicalVector max_plus_matvec(const TropicalMatrix& A, const TropicalVector& x) {
  if (static_cast<int>(x.size()) != A.cols())
    throw std::invalid_argument("max_plus_matvec: dimension mismatch");
  TropicalVector y(A.rows(), neg_inf);
  for (int j = 0; j < A.rows(); ++j) {
    double best = neg_inf;
    A.for_each_in_row(j, [&](int k, double a) {
      double t = trop_mul(a, x[k]);
      if (t > best) best = t;
    });
    y[j] = best;
  }
  return y;
}

/// (A\v)_k = min_j (-A_jk + v_j), the maximal lambda with A lambda <= v.
/// A min over an empty constraint set yields +inf.
inline TropicalVector residual_apply(const TropicalMatrix& A, const TropicalVector& v) {
  if (static_cast<int>(v.size()) != A.rows())
    throw std::invalid_argument("residual_apply: dimension mismatch");
  TropicalVector r(A.cols(), pos_inf);
  for (int j = 0; j < A.rows(); ++j) {
    const double vj = v[j];
    A.for_each_in_row(j, [&](int k, double a) {
      double t = trop_mul_dual(-a, vj);
      if (t < r[k]) r[k] = t;
    });
  }
  return r;
}

/// d_inf(u,v) = inf{ lambda >= 0 : -lambda + v <= u <= lambda + v }.
/// Matching infinities contribute 0; a finite entry against an infinite one
/// makes the distance +inf.
inline double sup_norm_distance(const TropicalVector& u, const TropicalVector& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("sup_norm_distance: index sets differ");
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] == v[i]) continue;  // covers equal infinities
    if (!std::isfinite(u[i]) || !std::isfinite(v[i])) return pos_inf;
    d = std::max(d, std::abs(u[i] - v[i]));
  }
  return d;
}

/// Serialize a finite or infinite scalar with 17 significant digits,
/// infinities as the literals `-inf` / `inf`.
inline std::string format_scalar(double x) {
  if (x == neg_inf) return "-inf";
  if (x == pos_inf) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// CSV dump, rows `j,i,value`.
inline void dump_matrix_csv(const TropicalMatrix& A, std::ostream& os) {
  for (int j = 0; j < A.rows(); ++j)
    A.for_each_in_row(j, [&](int i, double a) {
      os << j << ',' << i << ',' << format_scalar(a) << '\n';
    });
}

}  // namespace mpfem
