#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <vector>

#include "grushin/errors.hpp"

namespace grushin {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;
using Index = std::ptrdiff_t;

namespace detail {
template <class T>
T conj_if(const T& v) {
  if constexpr (std::is_same_v<T, cplx>) {
    return std::conj(v);
  } else {
    return v;
  }
}
}  // namespace detail

// Square banded matrix, row-major by diagonal offset.
template <class T>
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, int kl, int ku)
      : n_(static_cast<Index>(n)), kl_(kl), ku_(ku), data_(n * static_cast<std::size_t>(kl + ku + 1)) {}

  static BandMatrix identity(std::size_t n) {
    BandMatrix m(n, 0, 0);
    for (Index i = 0; i < m.n_; ++i) m.ref(i, i) = T(1);
    return m;
  }

  static BandMatrix diagonal(const std::vector<T>& d) {
    BandMatrix m(d.size(), 0, 0);
    for (Index i = 0; i < m.n_; ++i) m.ref(i, i) = d[static_cast<std::size_t>(i)];
    return m;
  }

  std::size_t size() const { return static_cast<std::size_t>(n_); }
  int lower() const { return kl_; }
  int upper() const { return ku_; }

  bool in_band(Index i, Index j) const {
    return i >= 0 && j >= 0 && i < n_ && j < n_ && j - i >= -kl_ && j - i <= ku_;
  }

  T operator()(Index i, Index j) const {
    return in_band(i, j) ? data_[slot(i, j)] : T(0);
  }

  T& ref(Index i, Index j) { return data_[slot(i, j)]; }

  std::vector<T> apply(const std::vector<T>& x) const {
    std::vector<T> y(static_cast<std::size_t>(n_), T(0));
    for (Index i = 0; i < n_; ++i) {
      T s(0);
      const Index lo = std::max<Index>(0, i - kl_);
      const Index hi = std::min<Index>(n_ - 1, i + ku_);
      for (Index j = lo; j <= hi; ++j) s += data_[slot(i, j)] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  BandMatrix adjoint() const {
    BandMatrix m(size(), ku_, kl_);
    for (Index i = 0; i < n_; ++i)
      for (Index j = std::max<Index>(0, i - kl_); j <= std::min<Index>(n_ - 1, i + ku_); ++j)
        m.ref(j, i) = detail::conj_if(data_[slot(i, j)]);
    return m;
  }

  BandMatrix scaled(T s) const {
    BandMatrix m = *this;
    for (auto& v : m.data_) v *= s;
    return m;
  }

  friend BandMatrix operator+(const BandMatrix& a, const BandMatrix& b) {
    BandMatrix m(a.size(), std::max(a.kl_, b.kl_), std::max(a.ku_, b.ku_));
    m.accumulate(a, T(1));
    m.accumulate(b, T(1));
    return m;
  }

  friend BandMatrix operator-(const BandMatrix& a, const BandMatrix& b) {
    BandMatrix m(a.size(), std::max(a.kl_, b.kl_), std::max(a.ku_, b.ku_));
    m.accumulate(a, T(1));
    m.accumulate(b, T(-1));
    return m;
  }

  friend BandMatrix operator*(const BandMatrix& a, const BandMatrix& b) {
    BandMatrix m(a.size(), a.kl_ + b.kl_, a.ku_ + b.ku_);
    const Index n = a.n_;
    for (Index i = 0; i < n; ++i)
      for (Index k = std::max<Index>(0, i - a.kl_); k <= std::min<Index>(n - 1, i + a.ku_); ++k) {
        const T aik = a.data_[a.slot(i, k)];
        if (aik == T(0)) continue;
        for (Index j = std::max<Index>(0, k - b.kl_); j <= std::min<Index>(n - 1, k + b.ku_); ++j)
          m.ref(i, j) += aik * b.data_[b.slot(k, j)];
      }
    return m;
  }

  // In-place a += s * other; other's band must fit.
  void accumulate(const BandMatrix& other, T s) {
    for (Index i = 0; i < other.n_; ++i)
      for (Index j = std::max<Index>(0, i - other.kl_); j <= std::min<Index>(other.n_ - 1, i + other.ku_); ++j)
        ref(i, j) += s * other.data_[other.slot(i, j)];
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_abs_diff(const BandMatrix& other) const {
    const int kl = std::max(kl_, other.kl_), ku = std::max(ku_, other.ku_);
    double m = 0.0;
    for (Index i = 0; i < n_; ++i)
      for (Index j = std::max<Index>(0, i - kl); j <= std::min<Index>(n_ - 1, i + ku); ++j)
        m = std::max(m, std::abs((*this)(i, j) - other(i, j)));
    return m;
  }

  bool is_hermitian(double tol = 0.0) const {
    const int k = std::max(kl_, ku_);
    for (Index i = 0; i < n_; ++i)
      for (Index j = i; j <= std::min<Index>(n_ - 1, i + k); ++j)
        if (std::abs((*this)(i, j) - detail::conj_if((*this)(j, i))) > tol) return false;
    return true;
  }

 private:
  std::size_t slot(Index i, Index j) const {
    return static_cast<std::size_t>(i * (kl_ + ku_ + 1) + (j - i + kl_));
  }

  Index n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  std::vector<T> data_;
};

using CBand = BandMatrix<cplx>;
using RBand = BandMatrix<double>;

// Banded LU with partial pivoting (gbtrf layout: U gains kl extra superdiagonals).
// With replace_tiny_pivots, near-zero pivots are nudged to eps*norm, which is
// what inverse iteration wants at a converged shift.
template <class T>
class BandLU {
 public:
  explicit BandLU(const BandMatrix<T>& a, bool replace_tiny_pivots = false)
      : n_(static_cast<Index>(a.size())),
        kl_(a.lower()),
        ku_(a.upper()),
        w_(2 * a.lower() + a.upper() + 1),
        u_(a.size() * static_cast<std::size_t>(w_), T(0)),
        l_(a.size() * static_cast<std::size_t>(std::max(1, a.lower())), T(0)),
        piv_(a.size(), 0) {
    for (Index i = 0; i < n_; ++i)
      for (Index j = std::max<Index>(0, i - kl_); j <= std::min<Index>(n_ - 1, i + ku_); ++j)
        at(i, j) = a(i, j);
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(a.max_abs(), 1e-300);
    for (Index k = 0; k < n_; ++k) {
      const Index last = std::min<Index>(n_ - 1, k + kl_);
      const Index right = std::min<Index>(n_ - 1, k + kl_ + ku_);
      Index p = k;
      for (Index r = k + 1; r <= last; ++r)
        if (std::abs(at(r, k)) > std::abs(at(p, k))) p = r;
      piv_[static_cast<std::size_t>(k)] = p;
      if (p != k)
        for (Index c = k; c <= right; ++c) std::swap(at(k, c), at(p, c));
      if (std::abs(at(k, k)) <= tiny) {
        if (!replace_tiny_pivots) throw DegeneracyError("singular banded matrix");
        at(k, k) = T(tiny);
      }
      const T pivot = at(k, k);
      for (Index r = k + 1; r <= last; ++r) {
        const T m = at(r, k) / pivot;
        l_[static_cast<std::size_t>(k * std::max(1, kl_) + (r - k - 1))] = m;
        if (m == T(0)) continue;
        for (Index c = k + 1; c <= right; ++c) at(r, c) -= m * at(k, c);
      }
    }
  }

  std::vector<T> solve(std::vector<T> b) const {
    for (Index k = 0; k < n_; ++k) {
      const Index p = piv_[static_cast<std::size_t>(k)];
      if (p != k) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(p)]);
      const Index last = std::min<Index>(n_ - 1, k + kl_);
      for (Index r = k + 1; r <= last; ++r)
        b[static_cast<std::size_t>(r)] -= l_[static_cast<std::size_t>(k * std::max(1, kl_) + (r - k - 1))] *
                                          b[static_cast<std::size_t>(k)];
    }
    for (Index i = n_ - 1; i >= 0; --i) {
      T s = b[static_cast<std::size_t>(i)];
      const Index right = std::min<Index>(n_ - 1, i + kl_ + ku_);
      for (Index c = i + 1; c <= right; ++c) s -= at(i, c) * b[static_cast<std::size_t>(c)];
      b[static_cast<std::size_t>(i)] = s / at(i, i);
    }
    return b;
  }

 private:
  T& at(Index i, Index c) { return u_[static_cast<std::size_t>(i * w_ + (c - i + kl_))]; }
  const T& at(Index i, Index c) const { return u_[static_cast<std::size_t>(i * w_ + (c - i + kl_))]; }

  Index n_;
  int kl_;
  int ku_;
  int w_;
  std::vector<T> u_;
  std::vector<T> l_;
  std::vector<Index> piv_;
};

// LU of the arrow matrix [[A, col], [row^T, corner]] with A banded.
// Band rows pivot among themselves; the border row joins the pivot choice only
// in the final 2x2 block, so a rank-one-deficient A is handled as long as its
// first n-1 columns are independent (always so for irreducible tridiagonal A).
class BorderedLU {
 public:
  BorderedLU(const CBand& a, const CVector& col, const CVector& row, cplx corner)
      : n_(static_cast<Index>(a.size())),
        kl_(a.lower()),
        ku_(a.upper()),
        w_(2 * a.lower() + a.upper() + 1),
        u_(a.size() * static_cast<std::size_t>(w_), cplx(0)),
        l_(a.size() * static_cast<std::size_t>(std::max(1, a.lower())), cplx(0)),
        bl_(a.size(), cplx(0)),
        col_(col),
        row_(row),
        piv_(a.size(), 0) {
    if (n_ < 1) throw ConfigurationError("empty bordered system");
    for (Index i = 0; i < n_; ++i)
      for (Index j = std::max<Index>(0, i - kl_); j <= std::min<Index>(n_ - 1, i + ku_); ++j)
        at(i, j) = a(i, j);
    double scale = a.max_abs();
    for (Index i = 0; i < n_; ++i)
      scale = std::max({scale, std::abs(col_[static_cast<std::size_t>(i)]), std::abs(row_[static_cast<std::size_t>(i)])});
    scale = std::max(scale, std::abs(corner));
    const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    for (Index k = 0; k + 1 < n_; ++k) {
      const Index last = std::min<Index>(n_ - 1, k + kl_);
      const Index right = std::min<Index>(n_ - 1, k + kl_ + ku_);
      Index p = k;
      for (Index r = k + 1; r <= last; ++r)
        if (std::abs(at(r, k)) > std::abs(at(p, k))) p = r;
      piv_[static_cast<std::size_t>(k)] = p;
      if (p != k) {
        for (Index c = k; c <= right; ++c) std::swap(at(k, c), at(p, c));
        std::swap(col_[static_cast<std::size_t>(k)], col_[static_cast<std::size_t>(p)]);
      }
      const cplx pivot = at(k, k);
      if (std::abs(pivot) <= tiny) throw DegeneracyError("bordered system: vanishing band pivot");
      for (Index r = k + 1; r <= last; ++r) {
        const cplx m = at(r, k) / pivot;
        l_[static_cast<std::size_t>(k * std::max(1, kl_) + (r - k - 1))] = m;
        if (m == cplx(0)) continue;
        for (Index c = k + 1; c <= right; ++c) at(r, c) -= m * at(k, c);
        col_[static_cast<std::size_t>(r)] -= m * col_[static_cast<std::size_t>(k)];
      }
      const cplx m = row_[static_cast<std::size_t>(k)] / pivot;
      bl_[static_cast<std::size_t>(k)] = m;
      if (m != cplx(0)) {
        for (Index c = k + 1; c <= right; ++c) row_[static_cast<std::size_t>(c)] -= m * at(k, c);
        corner -= m * col_[static_cast<std::size_t>(k)];
      }
    }
    piv_[static_cast<std::size_t>(n_ - 1)] = n_ - 1;
    a11_ = at(n_ - 1, n_ - 1);
    a12_ = col_[static_cast<std::size_t>(n_ - 1)];
    a21_ = row_[static_cast<std::size_t>(n_ - 1)];
    a22_ = corner;
    det_ = a11_ * a22_ - a12_ * a21_;
    const double det_scale = std::abs(a11_ * a22_) + std::abs(a12_ * a21_);
    if (std::abs(det_) <= 1e-13 * det_scale || det_scale == 0.0)
      throw DegeneracyError("bordered system is singular (degenerate kernel)");
  }

  // Returns (u, theta) with A u + theta col = f, row^T u + corner theta = g.
  std::pair<CVector, cplx> solve(CVector f, cplx g) const {
    for (Index k = 0; k + 1 < n_; ++k) {
      const Index p = piv_[static_cast<std::size_t>(k)];
      if (p != k) std::swap(f[static_cast<std::size_t>(k)], f[static_cast<std::size_t>(p)]);
      const Index last = std::min<Index>(n_ - 1, k + kl_);
      const cplx fk = f[static_cast<std::size_t>(k)];
      for (Index r = k + 1; r <= last; ++r)
        f[static_cast<std::size_t>(r)] -= l_[static_cast<std::size_t>(k * std::max(1, kl_) + (r - k - 1))] * fk;
      g -= bl_[static_cast<std::size_t>(k)] * fk;
    }
    const cplx fn = f[static_cast<std::size_t>(n_ - 1)];
    const cplx theta = (a11_ * g - a21_ * fn) / det_;
    f[static_cast<std::size_t>(n_ - 1)] = (a22_ * fn - a12_ * g) / det_;
    for (Index i = n_ - 2; i >= 0; --i) {
      cplx s = f[static_cast<std::size_t>(i)] - col_[static_cast<std::size_t>(i)] * theta;
      const Index right = std::min<Index>(n_ - 1, i + kl_ + ku_);
      for (Index c = i + 1; c <= right; ++c) s -= at(i, c) * f[static_cast<std::size_t>(c)];
      f[static_cast<std::size_t>(i)] = s / at(i, i);
    }
    return {std::move(f), theta};
  }

 private:
  cplx& at(Index i, Index c) { return u_[static_cast<std::size_t>(i * w_ + (c - i + kl_))]; }
  const cplx& at(Index i, Index c) const { return u_[static_cast<std::size_t>(i * w_ + (c - i + kl_))]; }

  Index n_;
  int kl_;
  int ku_;
  int w_;
  CVector u_;
  CVector l_;
  CVector bl_;
  CVector col_;
  CVector row_;
  std::vector<Index> piv_;
  cplx a11_{}, a12_{}, a21_{}, a22_{}, det_{};
};

// Real symmetric tridiagonal eigenproblem: Sturm bisection for eigenvalues,
// inverse iteration for eigenvectors.
class SymTridiagonal {
 public:
  SymTridiagonal(RVector diag, RVector off) : d_(std::move(diag)), e_(std::move(off)) {
    if (d_.empty() || e_.size() + 1 != d_.size()) throw ConfigurationError("tridiagonal: size mismatch");
    lo_ = hi_ = d_[0];
    for (std::size_t i = 0; i < d_.size(); ++i) {
      double r = 0.0;
      if (i > 0) r += std::abs(e_[i - 1]);
      if (i + 1 < d_.size()) r += std::abs(e_[i]);
      lo_ = std::min(lo_, d_[i] - r);
      hi_ = std::max(hi_, d_[i] + r);
    }
    norm_ = std::max(std::abs(lo_), std::abs(hi_));
  }

  std::size_t size() const { return d_.size(); }
  double norm() const { return norm_; }

  // Number of eigenvalues strictly below x.
  std::size_t count_below(double x) const {
    const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, norm_ * norm_);
    std::size_t count = 0;
    double q = d_[0] - x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < d_.size(); ++i) {
      q = d_[i] - x - e_[i - 1] * e_[i - 1] / q;
      if (std::abs(q) < pivmin) q = -pivmin;
      if (q < 0) ++count;
    }
    return count;
  }

  // k-th smallest eigenvalue (0-based).
  double eigenvalue(std::size_t k) const {
    if (k >= d_.size()) throw ConfigurationError("tridiagonal: eigenvalue index out of range");
    double a = lo_ - 1e-12 * norm_ - 1e-300, b = hi_ + 1e-12 * norm_ + 1e-300;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (b - a <= 2.0 * eps * (std::abs(a) + std::abs(b)) + 4.0 * eps * eps * norm_) break;
      if (mid <= a || mid >= b) break;
      if (count_below(mid) > k) {
        b = mid;
      } else {
        a = mid;
      }
    }
    return 0.5 * (a + b);
  }

  // Unit (Euclidean) eigenvector for a converged eigenvalue; `against` holds
  // vectors of nearby eigenvalues to orthogonalize against.
  RVector eigenvector(double lambda, const std::vector<const RVector*>& against = {}) const {
    const std::size_t n = d_.size();
    RBand shifted(n, 1, 1);
    for (std::size_t i = 0; i < n; ++i) {
      shifted.ref(static_cast<Index>(i), static_cast<Index>(i)) = d_[i] - lambda;
      if (i + 1 < n) {
        shifted.ref(static_cast<Index>(i), static_cast<Index>(i + 1)) = e_[i];
        shifted.ref(static_cast<Index>(i + 1), static_cast<Index>(i)) = e_[i];
      }
    }
    const BandLU<double> lu(shifted, true);
    RVector v(n);
    // Deterministic, non-symmetric start so no parity class is missed.
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    for (int it = 0; it < 4; ++it) {
      for (const RVector* w : against) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += v[i] * (*w)[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * (*w)[i];
      }
      normalize(v);
      v = lu.solve(v);
    }
    for (const RVector* w : against) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += v[i] * (*w)[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * (*w)[i];
    }
    normalize(v);
    return v;
  }

 private:
  static void normalize(RVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (s == 0.0) throw DegeneracyError("inverse iteration collapsed");
    for (double& x : v) x /= s;
  }

  RVector d_;
  RVector e_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double norm_ = 0.0;
};

}  // namespace grushin
