#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "grushin/errors.hpp"

namespace grushin {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

// Dense univariate polynomial over Q, ascending degree. The zero polynomial
// has no coefficients.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { trim(); }
  Poly(std::initializer_list<Rational> coeffs) : c_(coeffs) { trim(); }

  static Poly constant(const Rational& v) { return Poly({v}); }
  static Poly x() { return Poly({Rational(0), Rational(1)}); }

  // (x - r)^m
  static Poly root_power(const Rational& r, int m) {
    Poly p = constant(1);
    for (int k = 0; k < m; ++k) p = p * Poly({-r, Rational(1)});
    return p;
  }

  bool is_zero() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
  const std::vector<Rational>& coeffs() const { return c_; }
  Rational coeff(int k) const { return k >= 0 && k < static_cast<int>(c_.size()) ? c_[static_cast<std::size_t>(k)] : Rational(0); }
  Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }

  Rational eval(const Rational& x) const {
    Rational s = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * x + *it;
    return s;
  }

  double eval(double x) const {
    double s = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * x + static_cast<double>(*it);
    return s;
  }

  Poly derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<Rational> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<long long>(k);
    return Poly(std::move(d));
  }

  Poly monic() const {
    if (is_zero()) return {};
    const Rational lc = leading();
    std::vector<Rational> d = c_;
    for (auto& v : d) v /= lc;
    return Poly(std::move(d));
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<Rational> d(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = a.coeff(static_cast<int>(k)) + b.coeff(static_cast<int>(k));
    return Poly(std::move(d));
  }
  friend Poly operator-(const Poly& a) {
    std::vector<Rational> d = a.c_;
    for (auto& v : d) v = -v;
    return Poly(std::move(d));
  }
  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> d(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) d[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(d));
  }
  friend Poly operator*(const Rational& s, const Poly& a) { return Poly::constant(s) * a; }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  Poly pow(int n) const {
    if (n < 0) throw DomainError("negative polynomial power");
    Poly r = constant(1), base = *this;
    while (n > 0) {
      if (n & 1) r = r * base;
      base = base * base;
      n >>= 1;
    }
    return r;
  }

  // Euclidean division: a = q b + r, deg r < deg b.
  static std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw DomainError("polynomial division by zero");
    std::vector<Rational> r = a.c_;
    const int db = b.degree();
    if (a.degree() < db) return {Poly{}, a};
    std::vector<Rational> q(static_cast<std::size_t>(a.degree() - db + 1));
    const Rational lb = b.leading();
    for (int k = a.degree(); k >= db; --k) {
      const Rational f = r[static_cast<std::size_t>(k)] / lb;
      q[static_cast<std::size_t>(k - db)] = f;
      if (f == 0) continue;
      for (int j = 0; j <= db; ++j) r[static_cast<std::size_t>(k - db + j)] -= f * b.c_[static_cast<std::size_t>(j)];
    }
    r.resize(static_cast<std::size_t>(db));
    return {Poly(std::move(q)), Poly(std::move(r))};
  }

  friend Poly operator/(const Poly& a, const Poly& b) { return divmod(a, b).first; }
  friend Poly operator%(const Poly& a, const Poly& b) { return divmod(a, b).second; }

  // Monic gcd; gcd(0, 0) = 0.
  static Poly gcd(Poly a, Poly b) {
    while (!b.is_zero()) {
      Poly r = a % b;
      a = std::move(b);
      b = std::move(r).monic();
    }
    return a.monic();
  }

  std::string str(const std::string& var = "x") const {
    if (is_zero()) return "0";
    std::string out;
    for (int k = degree(); k >= 0; --k) {
      const Rational v = c_[static_cast<std::size_t>(k)];
      if (v == 0) continue;
      const bool neg = v < 0;
      const Rational mag = neg ? Rational(-v) : v;
      if (out.empty()) {
        if (neg) out += "-";
      } else {
        out += neg ? " - " : " + ";
      }
      const bool unit = mag == 1 && k > 0;
      if (!unit) {
        const std::string s = to_string(mag);
        out += denominator(mag) == 1 ? s : "(" + s + ")";
        if (k > 0) out += "*";
      }
      if (k > 0) out += var;
      if (k > 1) out += "^" + std::to_string(k);
    }
    return out;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }

  std::vector<Rational> c_;
};

inline int sign_of(const Rational& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Sturm chain p, p', -rem(...), ...
inline std::vector<Poly> sturm_chain(const Poly& p) {
  std::vector<Poly> chain;
  if (p.is_zero()) return chain;
  chain.push_back(p);
  Poly d = p.derivative();
  if (d.is_zero()) return chain;
  chain.push_back(d);
  for (;;) {
    Poly r = -(chain[chain.size() - 2] % chain.back());
    if (r.is_zero()) break;
    chain.push_back(std::move(r));
  }
  return chain;
}

// Number of distinct real roots of p (p nonzero).
inline int count_real_roots(const Poly& p) {
  if (p.is_zero()) throw DomainError("real roots of the zero polynomial");
  if (p.degree() == 0) return 0;
  const auto chain = sturm_chain(p);
  auto changes = [&](bool at_plus) {
    int count = 0, prev = 0;
    for (const auto& q : chain) {
      int s = sign_of(q.leading());
      if (!at_plus && q.degree() % 2 == 1) s = -s;
      if (s == 0) continue;
      if (prev != 0 && s != prev) ++count;
      prev = s;
    }
    return count;
  };
  return changes(false) - changes(true);
}

// Yun: p = c * prod_i a_i^i with a_i square-free, pairwise coprime, monic.
// Entry i-1 holds a_i (possibly constant 1).
inline std::vector<Poly> square_free_decomposition(const Poly& p) {
  if (p.is_zero()) throw DomainError("square-free decomposition of the zero polynomial");
  std::vector<Poly> out;
  if (p.degree() == 0) return out;
  const Poly dp = p.derivative();
  Poly b = Poly::gcd(p, dp);
  Poly c = p / b;
  Poly d = dp / b - c.derivative();
  while (c.degree() > 0) {
    Poly a = Poly::gcd(c, d);
    out.push_back(a);
    c = c / a;
    d = d / a - c.derivative();
  }
  while (!out.empty() && out.back().degree() == 0) out.pop_back();
  return out;
}

}  // namespace grushin
