#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/expr_parser.hpp"
#include "grushin/linalg.hpp"

namespace grushin {

using SymbolFn = std::function<cplx(const RVector& y, const RVector& eta)>;

struct Neighborhood {
  double radius = 0.1;
  int points = 11;  // per axis
};

struct SymbolField {
  SymbolFn principal;
  SymbolFn subprincipal;
  double m_prime = 0.0;
  int r = 1;
  int h = 2;
  int dim = 1;
  RVector y0;
  RVector eta0;
  Neighborhood neighborhood;
  bool gap_clause = false;  // caller asserts the intermediate terms vanish identically
  std::string principal_text;
  std::string subprincipal_text;

  void validate_shape() const {
    if (!principal) throw ConfigurationError("symbol field: principal symbol missing");
    if (dim < 1 || y0.size() != static_cast<std::size_t>(dim) || eta0.size() != static_cast<std::size_t>(dim))
      throw ConfigurationError("symbol field: base point dimension mismatch");
    double n = 0.0;
    for (double v : eta0) n += v * v;
    if (n == 0.0) throw ConfigurationError("symbol field: eta0 must be nonzero");
    if (h < 1 || r < 0) throw ConfigurationError("symbol field: h must be positive and r nonnegative");
    if (neighborhood.points < 1 || !(neighborhood.radius >= 0.0))
      throw ConfigurationError("symbol field: bad neighborhood");
  }

  cplx sub(const RVector& y, const RVector& eta) const { return subprincipal ? subprincipal(y, eta) : cplx(0.0); }
};

inline SymbolFn symbol_from_expr(const expr::Expr& e) {
  return [e](const RVector& y, const RVector& eta) { return expr::evaluate(e, y, eta); };
}

// principal(y, 2 eta) = 2^{m'} principal(y, eta) on 10 seeded random samples.
inline double homogeneity_defect(const SymbolField& f, unsigned seed = 12345) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  const double factor = std::pow(2.0, f.m_prime);
  for (int s = 0; s < 10; ++s) {
    RVector y(f.y0.size()), eta(f.eta0.size());
    double n = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      y[k] = f.y0[k] + u(rng);
      eta[k] = u(rng);
      n += eta[k] * eta[k];
    }
    if (n < 1e-6) eta[0] = 1.0;
    RVector eta2 = eta;
    for (double& v : eta2) v *= 2.0;
    const cplx a = f.principal(y, eta), b = f.principal(y, eta2);
    worst = std::max(worst, std::abs(b - factor * a) / std::max(1.0, std::abs(b)));
  }
  return worst;
}

inline void require_homogeneous(const SymbolField& f) {
  const double d = homogeneity_defect(f);
  if (d > 1e-8) throw DomainError("principal symbol is not homogeneous of the declared order (defect " + std::to_string(d) + ")");
}

inline void require_characteristic(const SymbolField& f) {
  if (std::abs(f.principal(f.y0, f.eta0)) > 1e-10)
    throw PreconditionError("principal symbol does not vanish at the declared characteristic point");
}

struct Sample {
  RVector y;
  RVector eta;
};

// Box in y around y0 times a patch of the unit cosphere around eta0/|eta0|.
inline std::vector<Sample> neighborhood_samples(const SymbolField& f, double* spacing = nullptr) {
  const int dim = f.dim;
  int pts = f.neighborhood.points;
  if (dim >= 3) pts = std::min(pts, 5);
  const double rad = f.neighborhood.radius;
  const double step = pts > 1 ? 2.0 * rad / (pts - 1) : 0.0;
  if (spacing) *spacing = step;
  double n0 = 0.0;
  for (double v : f.eta0) n0 += v * v;
  n0 = std::sqrt(n0);
  const int axes = 2 * dim;
  std::vector<int> idx(static_cast<std::size_t>(axes), 0);
  std::vector<Sample> out;
  for (;;) {
    Sample s{RVector(static_cast<std::size_t>(dim)), RVector(static_cast<std::size_t>(dim))};
    double n = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double oy = pts > 1 ? -rad + step * idx[static_cast<std::size_t>(k)] : 0.0;
      const double oe = pts > 1 ? -rad + step * idx[static_cast<std::size_t>(dim + k)] : 0.0;
      s.y[static_cast<std::size_t>(k)] = f.y0[static_cast<std::size_t>(k)] + oy;
      s.eta[static_cast<std::size_t>(k)] = f.eta0[static_cast<std::size_t>(k)] / n0 + oe;
      n += s.eta[static_cast<std::size_t>(k)] * s.eta[static_cast<std::size_t>(k)];
    }
    if (n > 1e-12) {
      for (double& v : s.eta) v /= std::sqrt(n);
      out.push_back(std::move(s));
    }
    int a = 0;
    while (a < axes && ++idx[static_cast<std::size_t>(a)] >= pts) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == axes || pts == 1) break;
  }
  return out;
}

// min over z >= 0 of |A z + B|^2 + extra = |A|^2 z^2 + 2 Re(A conj B) z + |B|^2 + extra.
inline double parabola_min(cplx A, cplx B, double extra = 0.0) {
  const double re = (A * std::conj(B)).real(), a2 = std::norm(A);
  double q = std::norm(B) + extra;
  if (re < 0.0 && a2 > 0.0) q -= re * re / a2;
  return q;
}

struct SymbolSample {
  RVector y;
  RVector eta;
  cplx principal{};
  cplx sub{};
  double bracket = 0.0;
};

struct CheckReport {
  bool pass = false;
  bool h1_pass = false;
  double h1_value = 0.0;
  double c = 0.0;
  std::size_t samples = 0;
  double grid_spacing = 0.0;
  double min_q = std::numeric_limits<double>::infinity();
  std::optional<SymbolSample> violation;  // first failing sample
  bool necessary_failure = false;          // h = 3 second-order vanishing clause
  std::string note;
};

// Parabola criterion on precomputed samples; base = (A, B, bracket) at (y0, eta0).
inline CheckReport check_parabola(const std::vector<SymbolSample>& samples, const SymbolSample& base, double c) {
  if (!(c > 0.0)) throw DomainError("constant c must be positive");
  CheckReport r;
  r.c = c;
  r.samples = samples.size();
  r.h1_value = std::norm(base.sub) + base.bracket;
  r.h1_pass = r.h1_value >= c;
  bool ok = true;
  for (const auto& s : samples) {
    const double q = parabola_min(s.principal, s.sub, s.bracket);
    r.min_q = std::min(r.min_q, q);
    if (q < c && ok) {
      ok = false;
      r.violation = s;
    }
  }
  r.pass = ok && r.h1_pass;
  return r;
}

// {f, g} = sum d_eta f d_y g - d_y f d_eta g by central differences at steps
// s and s/2 combined by Richardson. error gets the gap between the two
// estimates plus a rounding allowance.
inline cplx poisson_bracket(const SymbolFn& f, const SymbolFn& g, const RVector& y, const RVector& eta,
                            double step = 1e-5, double* error = nullptr) {
  const std::size_t n = y.size();
  auto partial = [&](const SymbolFn& fn, bool in_eta, std::size_t k, double hstep) {
    RVector yp = y, ym = y, ep = eta, em = eta;
    if (in_eta) {
      ep[k] += hstep;
      em[k] -= hstep;
    } else {
      yp[k] += hstep;
      ym[k] -= hstep;
    }
    return (fn(yp, ep) - fn(ym, em)) / (2.0 * hstep);
  };
  auto bracket = [&](double hstep) {
    cplx s(0.0);
    for (std::size_t k = 0; k < n; ++k)
      s += partial(f, true, k, hstep) * partial(g, false, k, hstep) - partial(f, false, k, hstep) * partial(g, true, k, hstep);
    return s;
  };
  const cplx coarse = bracket(step), fine = bracket(0.5 * step);
  const cplx value = (4.0 * fine - coarse) / 3.0;
  if (error) {
    const double scale = std::max({1.0, std::abs(f(y, eta)), std::abs(g(y, eta))});
    *error = std::abs(fine - coarse) + 64.0 * 1e-16 * scale * scale / (step * step) + 1e-9 * std::abs(value);
  }
  return value;
}

inline cplx poisson_bracket_over_i(const SymbolFn& f, const SymbolFn& g, const RVector& y, const RVector& eta,
                                   double step = 1e-5, double* error = nullptr) {
  return poisson_bracket(f, g, y, eta, step, error) / cplx(0.0, 1.0);
}

inline std::vector<SymbolSample> sample_field(const SymbolField& f, bool with_bracket, double* spacing) {
  std::vector<SymbolSample> out;
  const SymbolFn conj_a = [&f](const RVector& y, const RVector& eta) { return std::conj(f.principal(y, eta)); };
  for (const auto& s : neighborhood_samples(f, spacing)) {
    SymbolSample x{s.y, s.eta, f.principal(s.y, s.eta), f.sub(s.y, s.eta), 0.0};
    if (with_bracket) x.bracket = poisson_bracket_over_i(conj_a, f.principal, s.y, s.eta).real();
    out.push_back(std::move(x));
  }
  return out;
}

// (H1)/(H2) for r = 1 (h even) or r = 2 (h odd); c defaults to |a_sub(y0,eta0)|^2 / 2.
inline CheckReport check_H2(const SymbolField& f, std::optional<double> c = std::nullopt) {
  f.validate_shape();
  if (c && !(*c > 0.0)) throw DomainError("constant c must be positive");
  const int expected_r = f.h % 2 == 0 ? 1 : 2;
  if (f.r != expected_r)
    throw PreconditionError("subprincipal index r must be " + std::to_string(expected_r) + " for h = " + std::to_string(f.h));
  require_characteristic(f);
  require_homogeneous(f);
  const SymbolSample base{f.y0, f.eta0, f.principal(f.y0, f.eta0), f.sub(f.y0, f.eta0), 0.0};
  const double cc = c ? *c : 0.5 * std::norm(base.sub);
  double spacing = 0.0;
  const auto samples = sample_field(f, false, &spacing);
  if (!(cc > 0.0)) {
    CheckReport r;
    r.c = cc;
    r.samples = samples.size();
    r.grid_spacing = spacing;
    r.h1_value = std::norm(base.sub);
    r.note = "subprincipal vanishes at the base point; (H1) fails";
    return r;
  }
  CheckReport r = check_parabola(samples, base, cc);
  r.grid_spacing = spacing;
  r.note = r.pass ? "(H1) and (H2) hold on the sampled neighborhood" : "(H1) or (H2) violated";
  return r;
}

// h = 3 variant with (1/i){conj(a), a} added under the square root.
inline CheckReport check_h3(const SymbolField& f, std::optional<double> c = std::nullopt,
                            const std::optional<std::vector<double>>& bracket = std::nullopt) {
  f.validate_shape();
  if (f.h != 3) throw DomainError("check_h3 applies to h = 3 only");
  if (c && !(*c > 0.0)) throw DomainError("constant c must be positive");
  require_characteristic(f);
  require_homogeneous(f);
  double spacing = 0.0;
  auto samples = sample_field(f, !bracket.has_value(), &spacing);
  if (bracket) {
    if (bracket->size() != samples.size() + 1)
      throw ConfigurationError("bracket samples: expected one value per neighborhood sample plus the base point");
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k].bracket = (*bracket)[k + 1];
  }
  const SymbolFn conj_a = [&f](const RVector& y, const RVector& eta) { return std::conj(f.principal(y, eta)); };
  SymbolSample base{f.y0, f.eta0, f.principal(f.y0, f.eta0), f.sub(f.y0, f.eta0), 0.0};
  base.bracket = bracket ? (*bracket)[0] : poisson_bracket_over_i(conj_a, f.principal, f.y0, f.eta0).real();

  // Necessity clause: principal vanishing to second order with a_sub(y0,eta0) = 0.
  double grad = 0.0;
  for (int k = 0; k < f.dim; ++k)
    for (int which = 0; which < 2; ++which) {
      RVector yp = f.y0, ym = f.y0, ep = f.eta0, em = f.eta0;
      const double hs = 1e-5;
      if (which == 0) {
        yp[static_cast<std::size_t>(k)] += hs;
        ym[static_cast<std::size_t>(k)] -= hs;
      } else {
        ep[static_cast<std::size_t>(k)] += hs;
        em[static_cast<std::size_t>(k)] -= hs;
      }
      grad = std::max(grad, std::abs(f.principal(yp, ep) - f.principal(ym, em)) / (2.0 * hs));
    }
  if (grad <= 1e-6 && std::abs(base.sub) <= 1e-10) {
    CheckReport r;
    r.necessary_failure = true;
    r.samples = samples.size();
    r.grid_spacing = spacing;
    r.h1_value = std::norm(base.sub) + base.bracket;
    r.c = c.value_or(0.0);
    r.note = "principal vanishes to second order and the subprincipal vanishes at the base point: necessary condition fails";
    return r;
  }
  const double cc = c ? *c : 0.5 * (std::norm(base.sub) + base.bracket);
  if (!(cc > 0.0)) {
    CheckReport r;
    r.samples = samples.size();
    r.grid_spacing = spacing;
    r.h1_value = std::norm(base.sub) + base.bracket;
    r.c = cc;
    r.note = "|a_sub|^2 + bracket is not positive at the base point; (H1) fails";
    return r;
  }
  CheckReport r = check_parabola(samples, base, cc);
  r.grid_spacing = spacing;
  r.note = r.pass ? "sufficient condition verified on the sampled neighborhood" : "sufficient condition violated";
  return r;
}

enum class SignOutcome { Confirmed, Denied, Undetermined };

inline const char* to_string(SignOutcome s) {
  switch (s) {
    case SignOutcome::Confirmed:
      return "confirmed";
    case SignOutcome::Denied:
      return "denied";
    default:
      return "undetermined";
  }
}

struct SignReport {
  double value = 0.0;
  double error = 0.0;
  SignOutcome outcome = SignOutcome::Undetermined;
};

inline SignOutcome decide_sign(double value, double error) {
  if (value < -3.0 * error) return SignOutcome::Confirmed;
  if (value > 3.0 * error) return SignOutcome::Denied;
  return SignOutcome::Undetermined;
}

// Sign of (1/i){a, conj(a)} at (y0, eta0); negative confirms the extra 1/2 loss bound.
inline SignReport tangential_sign(const SymbolField& f) {
  f.validate_shape();
  if (!f.gap_clause)
    throw PreconditionError("tangential_sign: the caller must assert that the intermediate terms vanish (gap_clause)");
  require_characteristic(f);
  const SymbolFn conj_a = [&f](const RVector& y, const RVector& eta) { return std::conj(f.principal(y, eta)); };
  SignReport r;
  r.value = poisson_bracket_over_i(f.principal, conj_a, f.y0, f.eta0, 1e-5, &r.error).real();
  r.outcome = decide_sign(r.value, r.error);
  return r;
}

struct ProbeConfig {
  RVector t_values;
  std::size_t n = 512;       // quadrature points on the periodized window
  double half_width = 4.0;   // window [-L, L) in the scaled variable
  double residual_threshold = 0.05;

  // t_min, 2 t_min, ... up to t_max.
  static RVector geometric(double t_min, double t_max, double ratio = 2.0) {
    RVector t;
    for (double v = t_min; v <= t_max * (1.0 + 1e-12); v *= ratio) t.push_back(v);
    return t;
  }

  void validate() const {
    if (t_values.size() < 4) throw ConfigurationError("probe: need at least 4 scales");
    for (std::size_t k = 1; k < t_values.size(); ++k)
      if (!(t_values[k] > t_values[k - 1])) throw ConfigurationError("probe: scales must increase");
    if (!(t_values.front() > 0.0)) throw ConfigurationError("probe: scales must be positive");
    if (n < 64) throw ConfigurationError("probe: quadrature needs at least 64 points");
  }
};

inline double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

struct ProbeReport {
  RVector t_values;
  RVector norms_sq;  // |A u_t|^2
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the log fit
  double predicted_slope = 0.0;
  double prefactor = 0.0;           // exp(intercept)
  double predicted_prefactor = 0.0;  // |leading coefficient|^2 |v|^2
  double v_norm_sq = 0.0;
  bool elliptic = false;
  bool conclusive = false;
  std::string regime;
};

// |A u_t|^2 for u_t(y) = exp(i t^2 y eta0) v(t (y - y0)) in the scaled frame:
// phi_t(s) = (2 pi)^-1 sum exp(i s eta) a(y0 + s/t, t eta + t^2 eta0) vhat(eta) d eta,
// |A u_t|^2 = |phi_t|^2 / t.
inline ProbeReport localization_probe(const SymbolField& f, const ProbeConfig& cfg) {
  f.validate_shape();
  if (f.dim != 1) throw PreconditionError("localization_probe supports one transversal dimension only");
  cfg.validate();
  require_homogeneous(f);
  const std::size_t n = cfg.n;
  const double L = cfg.half_width;
  const double ds = 2.0 * L / static_cast<double>(n);
  const double deta = M_PI / L;
  RVector s(n), eta(n), v(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = -L + ds * static_cast<double>(k);
    eta[k] = (static_cast<double>(k) - static_cast<double>(n / 2)) * deta;
    v[k] = bump(s[k]);
  }
  std::vector<cplx> phase(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < n; ++m) phase[k * n + m] = std::polar(1.0, s[k] * eta[m]);
  CVector vhat(n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    cplx acc(0.0);
    for (std::size_t k = 0; k < n; ++k) acc += v[k] * std::conj(phase[k * n + m]);
    vhat[m] = ds * acc;
  }
  ProbeReport rep;
  for (double x : v) rep.v_norm_sq += x * x * ds;

  auto full = [&](const RVector& y, const RVector& e) {
    const cplx a = f.principal(y, e);
    return f.subprincipal ? a + f.subprincipal(y, e) : a;
  };
  const double y0 = f.y0[0], eta0 = f.eta0[0];
  for (double t : cfg.t_values) {
    double total = 0.0;
    RVector y(1), e(1);
    CVector weighted(n);
    for (std::size_t k = 0; k < n; ++k) {
      y[0] = y0 + s[k] / t;
      cplx acc(0.0);
      for (std::size_t m = 0; m < n; ++m) {
        if (std::abs(vhat[m]) < 1e-300) continue;
        e[0] = t * eta[m] + t * t * eta0;
        if (e[0] == 0.0) continue;
        acc += phase[k * n + m] * full(y, e) * vhat[m];
      }
      const cplx phi = acc * deta / (2.0 * M_PI);
      total += std::norm(phi) * ds;
    }
    rep.t_values.push_back(t);
    rep.norms_sq.push_back(total / t);
  }

  // Least squares on the upper half of the scales.
  const std::size_t first = cfg.t_values.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(cfg.t_values.size() - first);
  for (std::size_t k = first; k < cfg.t_values.size(); ++k) {
    const double lx = std::log(rep.t_values[k]), ly = std::log(rep.norms_sq[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  rep.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  rep.intercept = (sy - rep.slope * sx) / cnt;
  double res = 0.0;
  for (std::size_t k = first; k < cfg.t_values.size(); ++k) {
    const double d = std::log(rep.norms_sq[k]) - (rep.intercept + rep.slope * std::log(rep.t_values[k]));
    res += d * d;
  }
  rep.residual = std::sqrt(res / cnt);
  rep.prefactor = std::exp(rep.intercept);

  const cplx a0 = f.principal(f.y0, f.eta0), b0 = f.sub(f.y0, f.eta0);
  const double nu = 1.0;
  if (std::abs(a0) > 1e-10) {
    rep.elliptic = true;
    rep.regime = "elliptic: principal term dominates";
    rep.predicted_slope = 4.0 * f.m_prime - nu;
    rep.predicted_prefactor = std::norm(a0) * rep.v_norm_sq * std::pow(std::abs(f.eta0[0]), 2.0 * 2.0 * f.m_prime);
  } else {
    rep.regime = "characteristic: subprincipal of index " + std::to_string(f.r) + " active";
    rep.predicted_slope = 4.0 * f.m_prime - 4.0 * f.r / (f.h + 1.0) - nu;
    rep.predicted_prefactor = std::norm(b0) * rep.v_norm_sq;
  }
  rep.conclusive = rep.residual <= cfg.residual_threshold;
  return rep;
}

}  // namespace grushin
