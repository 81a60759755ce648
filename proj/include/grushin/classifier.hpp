#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grushin/errors.hpp"
#include "grushin/operator_poly.hpp"
#include "grushin/poly.hpp"
#include "grushin/reduction_engine.hpp"
#include "grushin/spectral_core.hpp"
#include "grushin/symbol_lab.hpp"

namespace grushin {

using Certificate = nlohmann::ordered_json;

enum class Status { HypoellipticMinimalLoss, Hypoelliptic, NotMinimallyHypoelliptic, Undetermined };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::HypoellipticMinimalLoss:
      return "HypoellipticMinimalLoss";
    case Status::Hypoelliptic:
      return "Hypoelliptic";
    case Status::NotMinimallyHypoelliptic:
      return "NotMinimallyHypoelliptic";
    default:
      return "Undetermined";
  }
}

struct Verdict {
  Status status = Status::Undetermined;
  std::optional<Rational> loss;
  Certificate certificate = Certificate::object();

  bool decided() const { return status != Status::Undetermined; }
};

inline Verdict make_verdict(Status s, std::optional<Rational> loss, Certificate cert) {
  return Verdict{s, std::move(loss), std::move(cert)};
}

inline Rational minimal_loss(int h) { return Rational(2 * h, h + 1); }

inline Certificate complex_json(cplx z) { return Certificate::array({z.real(), z.imag()}); }

// ---- Kohn extension: L L* + (fL)*(fL), L = D1 + i g(x1) D2 -------------

struct RootClass {
  Poly factor;  // square-free, monic
  int g_mult = 1;
  int f_mult = 0;  // -1 when f vanishes identically
  int real_roots = 0;
};

// Classes of roots of g sharing the pair (multiplicity in g, multiplicity in f).
inline std::vector<RootClass> root_classes(const Poly& g, const Poly& f) {
  if (g.is_zero()) throw DomainError("g vanishes identically: the characteristic set is everything");
  std::vector<RootClass> out;
  const auto parts = square_free_decomposition(g);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const int gm = static_cast<int>(i) + 1;
    const Poly& a = parts[i];
    if (a.degree() <= 0) continue;
    if (f.is_zero()) {
      out.push_back({a, gm, -1, count_real_roots(a)});
      continue;
    }
    // G_0 = a, G_{m+1} = gcd(G_m, f^(m)); G_m / G_{m+1} carries f-multiplicity exactly m.
    Poly gm_cur = a, deriv = f;
    for (int m = 0; gm_cur.degree() > 0; ++m) {
      const Poly next = Poly::gcd(gm_cur, deriv);
      const Poly exact = gm_cur / next;
      if (exact.degree() > 0) out.push_back({exact.monic(), gm, m, count_real_roots(exact)});
      gm_cur = next;
      deriv = deriv.derivative();
    }
  }
  return out;
}

inline Verdict kohn_loss(const Poly& g, const Poly& f) {
  const auto classes = root_classes(g, f);
  Certificate cert;
  cert["rule"] = "kohn-extension";
  cert["g"] = g.str();
  cert["f"] = f.str();
  Certificate list = Certificate::array();
  std::optional<Rational> worst;
  bool blocked = false;
  for (const auto& c : classes) {
    Certificate e;
    e["factor"] = c.factor.str();
    e["g_mult"] = c.g_mult;
    e["f_mult"] = c.f_mult < 0 ? Certificate("identically zero") : Certificate(c.f_mult);
    e["real_roots"] = c.real_roots;
    if (c.real_roots == 0) {
      e["note"] = "no real roots, discarded";
    } else if (c.g_mult % 2 == 1 && c.f_mult < 0) {
      e["note"] = "odd-order zero of g with f identically zero: kernel never lifted";
      blocked = true;
    } else {
      const int hf = c.g_mult % 2 == 0 ? 0 : c.f_mult;
      const Rational loss(2 * c.g_mult + 2 * hf, c.g_mult + 1);
      e["effective_f_mult"] = hf;
      e["loss"] = to_string(loss);
      if (!worst || loss > *worst) worst = loss;
    }
    list.push_back(std::move(e));
  }
  cert["classes"] = list;
  if (blocked) return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
  if (!worst) {
    cert["note"] = "g has no real zeros: elliptic";
    return make_verdict(Status::Hypoelliptic, Rational(0), cert);
  }
  return make_verdict(Status::Hypoelliptic, *worst, cert);
}

// ---- complex + real squares ------------------------------------------------

inline Verdict squares_loss(int k1, int k2) {
  if (k1 < 1 || k2 < 1) throw DomainError("squares: k1 and k2 must be positive");
  Certificate cert;
  cert["rule"] = "squares";
  cert["k1"] = k1;
  cert["k2"] = k2;
  Rational loss;
  if (k2 <= k1) {
    cert["case"] = "k2 <= k1: localized operator injective with h = k2";
    loss = Rational(2 * k2, k2 + 1);
  } else if (k1 % 2 == 0) {
    cert["case"] = "k2 > k1, k1 even: localized operator injective";
    loss = Rational(2 * k1, k1 + 1);
  } else {
    cert["case"] = "k2 > k1, k1 odd: first nonzero term at order 2/(k1+1) - 2(k2-k1)/(k1+1)";
    loss = Rational(2 * k2, k1 + 1);
  }
  return make_verdict(Status::Hypoelliptic, loss, cert);
}

inline Verdict even_example_loss(int h, int k) {
  if (h < 1 || k < 1) throw DomainError("even example: h and k must be positive");
  if (h % 2 != 0) throw DomainError("even example: h must be even");
  if (k % 2 != 1) throw DomainError("even example: k must be odd");
  Certificate cert;
  cert["rule"] = "even-example";
  cert["h"] = h;
  cert["k"] = k;
  cert["first_nonzero"] = "l_{(2-" + std::to_string(k) + ")/" + std::to_string(h + 1) + "}";
  return make_verdict(Status::Hypoelliptic, Rational(2 * h + k, h + 1), cert);
}

// ---- verdict assembly from l-symbols --------------------------------------

// Neighborhood values of l_{2/(h+1)} (principal) and the deciding entry (sub),
// plus (1/i){conj(l_{1/2}), l_{1/2}} for h = 3.
struct NeighborhoodData {
  std::vector<SymbolSample> samples;
  double base_bracket = 0.0;
  std::optional<double> c;
  double grid_spacing = 0.0;
};

inline Certificate ell_certificate(const EllTable& t) {
  Certificate e;
  e["h"] = t.h;
  Certificate vals = Certificate::array(), errs = Certificate::array(), why = Certificate::array();
  for (std::size_t j = 0; j < 3; ++j) {
    vals.push_back(complex_json(t.ell[j]));
    errs.push_back(t.error[j]);
    why.push_back(t.certificates[j].structural_zero ? t.certificates[j].reason : std::string());
  }
  e["ell"] = vals;
  e["error"] = errs;
  e["structural_zero"] = why;
  e["kernel"] = t.kernel;
  e["kernel_index"] = t.kernel_index;
  e["grid"] = {{"T", t.grid.T}, {"N", t.grid.N}};
  return e;
}

inline Verdict assemble_verdict(const EllTable& t, const std::optional<NeighborhoodData>& hood = std::nullopt) {
  const int h = t.h;
  Certificate cert;
  cert["rule"] = "ell-assembly";
  cert["ell"] = ell_certificate(t);
  if (!t.kernel) {
    if (t.nonzero(0)) {
      cert["reason"] = "l_{2/(h+1)} nonzero at the base point: localized operator injective";
      return make_verdict(Status::HypoellipticMinimalLoss, minimal_loss(h), cert);
    }
    cert["reason"] = "no kernel detected but l_{2/(h+1)} within its error bar";
    return make_verdict(Status::Undetermined, std::nullopt, cert);
  }

  // l_{1/(h+1)} for even h, l_0 for odd h.
  const int j = h % 2 == 0 ? 1 : 2;
  cert["deciding_entry"] = j;
  cert["deciding_order"] = t.order(j);
  const Rational target = h % 2 == 0 ? Rational(2 * h + 1, h + 1) : Rational(2);

  auto entry_gate = [&](const char* missing) -> std::optional<Verdict> {
    if (t.is_zero(j)) {
      cert["reason"] = std::string("deciding entry vanishes structurally (") + t.certificates[static_cast<std::size_t>(j)].reason + ")";
      return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
    }
    if (!t.nonzero(j)) {
      cert["reason"] = missing;
      return make_verdict(Status::Undetermined, std::nullopt, cert);
    }
    return std::nullopt;
  };

  if (h == 3) {
    bool flat = t.translation_invariant;
    if (!flat && hood && !hood->samples.empty()) {
      flat = true;
      for (const auto& s : hood->samples)
        if (std::abs(s.principal) > 3.0 * t.error[0]) flat = false;
    }
    if (flat) {
      cert["clause"] = "l_{1/2} vanishes identically near the base point: l_0 != 0 is necessary and sufficient";
      if (auto v = entry_gate("l_0 within its error bar")) return *v;
      cert["reason"] = "l_0 nonzero";
      return make_verdict(Status::Hypoelliptic, Rational(2), cert);
    }
    if (!hood || hood->samples.empty()) {
      cert["reason"] = "h = 3 needs neighborhood samples with the bracket term";
      return make_verdict(Status::Undetermined, std::nullopt, cert);
    }
    const SymbolSample base{{}, {}, t.ell[0], t.ell[2], hood->base_bracket};
    const double c = hood->c.value_or(0.5 * (std::norm(base.sub) + base.bracket));
    if (!(c > 0.0)) {
      cert["reason"] = "|l_0|^2 + bracket not positive at the base point";
      return make_verdict(Status::Undetermined, std::nullopt, cert);
    }
    const CheckReport r = check_parabola(hood->samples, base, c);
    cert["c"] = c;
    cert["samples"] = r.samples;
    cert["grid_spacing"] = hood->grid_spacing;
    cert["min_q"] = r.min_q;
    if (r.pass) {
      cert["reason"] = "sufficient condition verified on the sampled neighborhood";
      return make_verdict(Status::HypoellipticMinimalLoss, Rational(2), cert);
    }
    cert["reason"] = "sufficient condition not verified (it is not necessary for h = 3)";
    return make_verdict(Status::Undetermined, std::nullopt, cert);
  }

  if (auto v = entry_gate("deciding entry within its error bar")) return *v;
  if (hood && !hood->samples.empty()) {
    const SymbolSample base{{}, {}, t.ell[0], t.ell[static_cast<std::size_t>(j)], 0.0};
    const double c = hood->c.value_or(0.5 * std::norm(base.sub));
    const CheckReport r = check_parabola(hood->samples, base, c);
    cert["c"] = c;
    cert["samples"] = r.samples;
    cert["grid_spacing"] = hood->grid_spacing;
    cert["min_q"] = r.min_q;
    if (r.pass) {
      cert["reason"] = "deciding entry nonzero and the parabola condition holds on the neighborhood";
      return make_verdict(Status::HypoellipticMinimalLoss, target, cert);
    }
    cert["reason"] = "parabola condition violated on the neighborhood";
    return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
  }
  if (t.translation_invariant) {
    cert["reason"] = "deciding entry nonzero; symbols independent of x' so l_{2/(h+1)} vanishes identically";
    return make_verdict(Status::HypoellipticMinimalLoss, target, cert);
  }
  cert["reason"] = "necessary conditions passed; neighborhood data needed for a decision";
  return make_verdict(Status::Undetermined, std::nullopt, cert);
}

// ---- Gilioli-Treves: D1^2 + a x1^{2h} D2^2 + beta(x1) x1^{h-1} D2 ---------

// j0 with lambda_{j0} = 0 at xi2 = xi_sign, if any.
inline std::optional<int> gilioli_treves_kernel_index(int h, double a, double beta0, int xi_sign) {
  const double tol = 1e-9 * std::max(1.0, std::abs(beta0));
  for (int j = 0; j < 10000; ++j) {
    const auto crit = critical_b1(h, j, a, 1.0);
    bool beyond = true;
    for (const cplx& c : crit) {
      if (std::abs(c.real() - beta0 * xi_sign) <= tol) return j;
      if (std::abs(c.real()) <= std::abs(beta0) + tol) beyond = false;
    }
    if (beyond) break;
  }
  return std::nullopt;
}

inline Verdict gilioli_treves(int h, double a, const RVector& beta, int xi_sign, const EllOptions& opt = {}) {
  if (h < 1) throw DomainError("gilioli-treves: h must be positive");
  if (!(a > 0.0)) throw DomainError("gilioli-treves: a must be positive");
  if (beta.size() != 3) throw ConfigurationError("gilioli-treves: beta needs beta(0), beta'(0), beta''(0)");
  if (xi_sign != 1 && xi_sign != -1) throw DomainError("gilioli-treves: xi sign must be +1 or -1");
  Certificate cert;
  cert["rule"] = "gilioli-treves";
  cert["h"] = h;
  cert["a"] = a;
  cert["beta"] = beta;
  cert["xi_sign"] = xi_sign;
  const auto j0 = gilioli_treves_kernel_index(h, a, beta[0], xi_sign);
  if (!j0) {
    cert["reason"] = "beta(0) is not critical: localized operator injective";
    return make_verdict(Status::HypoellipticMinimalLoss, minimal_loss(h), cert);
  }
  cert["j0"] = *j0;
  const double b1 = beta[1], b2 = beta[2];
  if (h % 2 == 0) {
    if (b1 != 0.0) {
      cert["reason"] = "even h, beta'(0) != 0";
      return make_verdict(Status::HypoellipticMinimalLoss, Rational(2 * h + 1, h + 1), cert);
    }
    cert["reason"] = "even h, beta'(0) = 0: l_{1/(h+1)} vanishes";
    return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
  }
  if (b1 == 0.0 && b2 == 0.0) {
    cert["reason"] = "odd h, (beta'(0), beta''(0)) = (0, 0): necessary condition fails";
    return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
  }
  if (*j0 == 0) {
    if (b1 == 0.0) {
      cert["reason"] = "odd h, j0 = 0, beta'(0) = 0, beta''(0) != 0";
      return make_verdict(Status::HypoellipticMinimalLoss, Rational(2), cert);
    }
    if (b2 * xi_sign < 0.0) {
      cert["reason"] = "odd h, j0 = 0, beta'(0) != 0 with beta''(0) xi2 < 0";
      return make_verdict(Status::HypoellipticMinimalLoss, Rational(2), cert);
    }
    if (b2 == 0.0) cert["boundary_case"] = "beta''(0) = 0 with beta'(0) != 0: sign rule inconclusive, numeric l_0 test";
  }
  EllOptions o = opt;
  o.allow_h1 = true;  // symbols are x'-independent, so no transversal terms enter
  const EllTable table = ell_symbols(gilioli_treves_model(h, a, beta, xi_sign), o);
  cert["ell"] = ell_certificate(table);
  if (table.nonzero(2)) {
    cert["reason"] = "numeric l_0 nonzero beyond its error bar";
    return make_verdict(Status::HypoellipticMinimalLoss, Rational(2), cert);
  }
  if (table.is_zero(2)) {
    cert["reason"] = "l_0 vanishes structurally";
    return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
  }
  cert["reason"] = "numeric l_0 within its error bar";
  return make_verdict(Status::Undetermined, std::nullopt, cert);
}

// ---- tangential bracket test ----------------------------------------------

struct BracketValue {
  cplx value{};
  double error = 0.0;
  cplx first{};   // (1/i){b1, conj b1}
  cplx second{};  // b1/(a|xi|^2) {Im b1, a|xi|^2}
};

inline BracketValue tangential_bracket(const TransversalSymbols& s, double step = 1e-5) {
  const SymbolFn b1 = [&s](const RVector& y, const RVector& e) { return s.b1(y, e); };
  const SymbolFn b1bar = [&s](const RVector& y, const RVector& e) { return std::conj(s.b1(y, e)); };
  const SymbolFn im_b1 = [&s](const RVector& y, const RVector& e) { return cplx(s.b1(y, e).imag(), 0.0); };
  const SymbolFn energy = [&s](const RVector& y, const RVector& e) {
    double n = 0.0;
    for (double v : e) n += v * v;
    return s.a(y) * n;
  };
  BracketValue r;
  double e1 = 0.0, e2 = 0.0;
  r.first = poisson_bracket_over_i(b1, b1bar, s.x0, s.xi0, step, &e1);
  const cplx pb = poisson_bracket(im_b1, energy, s.x0, s.xi0, step, &e2);
  const cplx ratio = s.b1(s.x0, s.xi0) / energy(s.x0, s.xi0);
  r.second = ratio * pb;
  r.value = r.first - r.second;
  r.error = e1 + std::abs(ratio) * e2;
  return r;
}

inline Verdict tangential_bracket_test(const CoefficientModel& model, const SpectralOptions& opt = {}) {
  if (!model.is_tangential()) throw PreconditionError("tangential bracket test: model has x1-dependent coefficients");
  const TransversalSymbols& s = model.transversal;
  if (!s.available()) throw ConfigurationError("tangential bracket test: a and b1 callbacks with x0, xi0 are required");
  double xi2 = 0.0;
  for (double v : s.xi0) xi2 += v * v;
  if (xi2 == 0.0) throw ConfigurationError("tangential bracket test: xi0 must be nonzero");
  const cplx a0 = s.a(s.x0);
  if (!(a0.real() > 0.0) || a0.imag() != 0.0) throw DomainError("tangential bracket test: a(x0) must be real positive");
  const cplx b0 = s.b1(s.x0, s.xi0);
  const OscillatorSpec spec{model.h, a0.real() * xi2, b0, {}};
  const SpectralSolution sol = eigenpairs(spec, 1, opt);
  Certificate cert;
  cert["rule"] = "tangential-bracket";
  cert["h"] = model.h;
  cert["a"] = s.a_text;
  cert["b1"] = s.b1_text;
  cert["x0"] = s.x0;
  cert["xi0"] = s.xi0;
  cert["localized"] = {{"c2", spec.c2}, {"c1", complex_json(spec.c1)}};
  if (!sol.has_kernel())
    throw PreconditionError("tangential bracket test: no vanishing eigenvalue at the base point (nearest " +
                            std::to_string(sol.kernel_gap) + ")");
  cert["j0"] = sol.kernel_index;
  const BracketValue v = tangential_bracket(s);
  cert["bracket"] = complex_json(v.value);
  cert["bracket_error"] = v.error;
  cert["terms"] = {complex_json(v.first), complex_json(v.second)};
  switch (decide_sign(v.value.real(), v.error)) {
    case SignOutcome::Confirmed:
      cert["reason"] = "bracket negative";
      return make_verdict(Status::HypoellipticMinimalLoss, minimal_loss(model.h) + Rational(1, 2), cert);
    case SignOutcome::Denied:
      cert["reason"] = "bracket positive";
      return make_verdict(Status::NotMinimallyHypoelliptic, std::nullopt, cert);
    default:
      cert["reason"] = "bracket within its finite-difference error of zero";
      return make_verdict(Status::Undetermined, std::nullopt, cert);
  }
}

}  // namespace grushin
