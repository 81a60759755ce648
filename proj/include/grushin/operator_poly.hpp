#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/grid.hpp"
#include "grushin/linalg.hpp"
#include "grushin/spectral_core.hpp"

namespace grushin {

// coeff * t^alpha D_t^beta, D_t = -i d/dt.
struct Term {
  int alpha = 0;
  int beta = 0;
  cplx coeff{0.0, 0.0};
};

enum class Parity { Even, Odd, Mixed };

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::Even:
      return "even";
    case Parity::Odd:
      return "odd";
    default:
      return "mixed";
  }
}

// Terms keep insertion order; equal (alpha, beta) keys merge.
class OperatorPoly {
 public:
  OperatorPoly() = default;
  OperatorPoly(std::initializer_list<Term> terms) {
    for (const auto& t : terms) add(t.alpha, t.beta, t.coeff);
  }

  OperatorPoly& add(int alpha, int beta, cplx coeff) {
    if (alpha < 0 || beta < 0) throw DomainError("operator powers must be nonnegative");
    for (auto& t : terms_)
      if (t.alpha == alpha && t.beta == beta) {
        t.coeff += coeff;
        return *this;
      }
    terms_.push_back({alpha, beta, coeff});
    return *this;
  }

  OperatorPoly& add(const OperatorPoly& other, cplx scale = 1.0) {
    for (const auto& t : other.terms_) add(t.alpha, t.beta, scale * t.coeff);
    return *this;
  }

  const std::vector<Term>& terms() const { return terms_; }

  bool is_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.coeff == cplx(0.0); });
  }

  int max_beta() const {
    int b = 0;
    for (const auto& t : terms_) b = std::max(b, t.beta);
    return b;
  }

  friend OperatorPoly operator+(OperatorPoly a, const OperatorPoly& b) { return a.add(b); }
  friend OperatorPoly operator*(cplx s, OperatorPoly a) {
    for (auto& t : a.terms_) t.coeff *= s;
    return a;
  }

  friend bool operator==(const OperatorPoly& a, const OperatorPoly& b) {
    auto covers = [](const OperatorPoly& x, const OperatorPoly& y) {
      for (const auto& t : x.terms_) {
        cplx other(0.0);
        for (const auto& u : y.terms_)
          if (u.alpha == t.alpha && u.beta == t.beta) other = u.coeff;
        if (other != t.coeff) return false;
      }
      return true;
    };
    return covers(a, b) && covers(b, a);
  }

 private:
  std::vector<Term> terms_;
};

// Terms with zero coefficient are ignored; the zero operator counts as even.
inline Parity parity_of(const OperatorPoly& op) {
  bool even = false, odd = false;
  for (const auto& t : op.terms()) {
    if (t.coeff == cplx(0.0)) continue;
    ((t.alpha + t.beta) % 2 == 0 ? even : odd) = true;
  }
  if (even && odd) return Parity::Mixed;
  return odd ? Parity::Odd : Parity::Even;
}

inline CBand multiplication_matrix(const Grid& grid, int alpha) {
  const RVector t = grid.points();
  CBand m(grid.N, 0, 0);
  for (std::size_t k = 0; k < grid.N; ++k) m.ref(static_cast<Index>(k), static_cast<Index>(k)) = ipow(t[k], alpha);
  return m;
}

// D_t as -i times the central first difference, D_t^2 as the 3-point second
// difference, higher powers by products of those two.
inline CBand derivative_matrix(const Grid& grid, int beta) {
  const std::size_t n = grid.N;
  const double dx = grid.spacing();
  if (beta == 0) return CBand::identity(n);
  if (beta == 1) {
    CBand m(n, 1, 1);
    const cplx c = cplx(0.0, -1.0) / (2.0 * dx);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      m.ref(static_cast<Index>(k), static_cast<Index>(k + 1)) = c;
      m.ref(static_cast<Index>(k + 1), static_cast<Index>(k)) = -c;
    }
    return m;
  }
  if (beta == 2) {
    CBand m(n, 1, 1);
    for (std::size_t k = 0; k < n; ++k) {
      m.ref(static_cast<Index>(k), static_cast<Index>(k)) = 2.0 / (dx * dx);
      if (k + 1 < n) {
        m.ref(static_cast<Index>(k), static_cast<Index>(k + 1)) = -1.0 / (dx * dx);
        m.ref(static_cast<Index>(k + 1), static_cast<Index>(k)) = -1.0 / (dx * dx);
      }
    }
    return m;
  }
  return derivative_matrix(grid, 2) * derivative_matrix(grid, beta - 2);
}

// sum coeff * diag(t^alpha) * D^beta, accumulated in term order.
inline CBand to_matrix(const OperatorPoly& op, const Grid& grid) {
  grid.validate();
  if (!grid.resolved()) throw ConfigurationError("to_matrix: grid half-width is unresolved");
  int band = 0;
  for (const auto& t : op.terms()) band = std::max(band, (t.beta + 1) / 2);
  CBand m(grid.N, band, band);
  const RVector x = grid.points();
  for (const auto& t : op.terms()) {
    if (t.beta == 0) {
      for (std::size_t k = 0; k < grid.N; ++k)
        m.ref(static_cast<Index>(k), static_cast<Index>(k)) += t.coeff * ipow(x[k], t.alpha);
      continue;
    }
    const CBand d = derivative_matrix(grid, t.beta);
    const int w = std::max(d.lower(), d.upper());
    for (Index i = 0; i < static_cast<Index>(grid.N); ++i) {
      const cplx scale = t.coeff * ipow(x[static_cast<std::size_t>(i)], t.alpha);
      for (Index j = std::max<Index>(0, i - w); j <= std::min<Index>(static_cast<Index>(grid.N) - 1, i + w); ++j)
        m.ref(i, j) += scale * d(i, j);
    }
  }
  return m;
}

inline CBand adjoint_matrix(const OperatorPoly& op, const Grid& grid) { return to_matrix(op, grid).adjoint(); }

// Numeric access to a(x') and b1(x', xi') for bracket evaluation.
struct TransversalSymbols {
  std::function<cplx(const RVector&)> a;
  std::function<cplx(const RVector&, const RVector&)> b1;
  RVector x0;
  RVector xi0;
  std::string a_text;
  std::string b1_text;

  bool available() const { return static_cast<bool>(a) && static_cast<bool>(b1) && !x0.empty() && x0.size() == xi0.size(); }
};

// Taylor data in x1 at 0 (coefficients, i.e. derivatives already divided by k!).
struct CoefficientModel {
  int h = 1;
  RVector a_taylor;
  CVector b1_taylor;
  double xi_norm = 1.0;
  std::string base_point;
  bool tangential = false;  // coefficients independent of x1; missing orders read as 0
  bool translation_invariant = false;  // symbols independent of x' near the base point
  std::map<int, OperatorPoly> extra_terms;  // added to P^{(2+r)}
  TransversalSymbols transversal;

  void validate() const {
    if (h < 1) throw ConfigurationError("model: h must be a positive integer");
    if (a_taylor.empty() || !(a_taylor[0] > 0.0)) throw ConfigurationError("model: a_taylor[0] must be positive");
    if (b1_taylor.empty()) throw ConfigurationError("model: b1_taylor must not be empty");
    if (!(xi_norm > 0.0)) throw ConfigurationError("model: xi_norm must be positive");
  }

  double a_coeff(int r) const {
    if (r < static_cast<int>(a_taylor.size())) return a_taylor[static_cast<std::size_t>(r)];
    if (tangential) return 0.0;
    throw ConfigurationError("model: a_taylor needs order " + std::to_string(r));
  }

  cplx b1_coeff(int r) const {
    if (r < static_cast<int>(b1_taylor.size())) return b1_taylor[static_cast<std::size_t>(r)];
    if (tangential) return 0.0;
    throw ConfigurationError("model: b1_taylor needs order " + std::to_string(r));
  }

  // All x1-derivatives of the coefficients vanish and nothing else is attached.
  bool is_tangential() const {
    for (std::size_t k = 1; k < a_taylor.size(); ++k)
      if (a_taylor[k] != 0.0) return false;
    for (std::size_t k = 1; k < b1_taylor.size(); ++k)
      if (b1_taylor[k] != cplx(0.0)) return false;
    for (const auto& [r, op] : extra_terms)
      if (!op.is_zero()) return false;
    return true;
  }

  OscillatorSpec base_spec(const Grid& grid = {}) const {
    validate();
    return OscillatorSpec{h, a_taylor[0] * xi_norm * xi_norm, b1_taylor[0], grid};
  }
};

// P^{(2+r)}: D^2 (r = 0), a_r |xi'|^2 t^{2h+r}, b1_r t^{h-1+r}, plus extra terms.
inline OperatorPoly localized_operator(const CoefficientModel& model, int r) {
  if (r < 0) throw DomainError("localized_operator: r must be nonnegative");
  model.validate();
  OperatorPoly op;
  if (r == 0) op.add(0, 2, 1.0);
  op.add(2 * model.h + r, 0, model.a_coeff(r) * model.xi_norm * model.xi_norm);
  op.add(model.h - 1 + r, 0, model.b1_coeff(r));
  if (auto it = model.extra_terms.find(r); it != model.extra_terms.end()) op.add(it->second);
  return op;
}

// D1^2 + a x1^{2h} D2^2 + x1^{h-1} beta(x1) D2 at xi2 = xi_sign; beta given by derivatives.
inline CoefficientModel gilioli_treves_model(int h, double a, const RVector& beta_derivs, int xi_sign) {
  if (beta_derivs.size() < 3) throw ConfigurationError("beta needs beta(0), beta'(0), beta''(0)");
  if (xi_sign != 1 && xi_sign != -1) throw DomainError("xi sign must be +1 or -1");
  CoefficientModel m;
  m.h = h;
  m.a_taylor = {a, 0.0, 0.0};
  m.b1_taylor = {beta_derivs[0] * xi_sign, beta_derivs[1] * xi_sign, 0.5 * beta_derivs[2] * xi_sign};
  m.xi_norm = 1.0;
  m.base_point = "x'=0, xi2=" + std::to_string(xi_sign);
  m.translation_invariant = true;
  return m;
}

// Sum of squares X X* + (x1^{k2} D2)^2 with X = D1 + i x1^{k1} D2 at xi2 = 1:
// h = k1, a(x1) = 1 + x1^{2(k2-k1)}, b1 = -k1.
inline CoefficientModel squares_model(int k1, int k2) {
  if (k1 < 1 || k2 <= k1) throw DomainError("squares_model needs 1 <= k1 < k2");
  CoefficientModel m;
  m.h = k1;
  const int shift = 2 * (k2 - k1);
  m.a_taylor.assign(static_cast<std::size_t>(std::max(3, shift + 1)), 0.0);
  m.a_taylor[0] = 1.0;
  m.a_taylor[static_cast<std::size_t>(shift)] += 1.0;
  m.b1_taylor = {cplx(-k1), 0.0, 0.0};
  m.xi_norm = 1.0;
  m.base_point = "x'=0, xi2=1";
  m.translation_invariant = true;
  return m;
}

// L L* + (f L)* (f L) with L = D1 + i a x1^h D2 and f = b x1^k, at xi2 = 1.
// The second addendum enters P^{(2+2k)} as b^2 L_t* t^{2k} L_t, L_t = D_t + i a t^h.
inline CoefficientModel kohn_model(int h, int k, double a, double b) {
  if (h < 1 || k < 1) throw DomainError("kohn_model needs h >= 1 and k >= 1");
  CoefficientModel m;
  m.h = h;
  m.a_taylor = {a * a, 0.0, 0.0};
  m.b1_taylor = {cplx(-h * a), 0.0, 0.0};
  m.xi_norm = 1.0;
  m.base_point = "x'=0, xi2=1";
  m.translation_invariant = true;
  const double b2 = b * b;
  OperatorPoly p;
  p.add(2 * k, 2, b2);
  p.add(2 * k - 1, 1, cplx(0.0, -2.0 * k * b2));
  p.add(2 * h + 2 * k, 0, b2 * a * a);
  p.add(2 * k + h - 1, 0, b2 * h * a + 2.0 * k * b2 * a);
  m.extra_terms[2 * k] = p;
  return m;
}

// x1-independent coefficients.
inline CoefficientModel tangential_model(int h, double a, cplx b1, double xi_norm = 1.0) {
  CoefficientModel m;
  m.h = h;
  m.a_taylor = {a};
  m.b1_taylor = {b1};
  m.xi_norm = xi_norm;
  m.tangential = true;
  m.base_point = "tangential";
  return m;
}

}  // namespace grushin
