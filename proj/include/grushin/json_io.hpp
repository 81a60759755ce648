#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "grushin/classifier.hpp"
#include "grushin/errors.hpp"
#include "grushin/expr_parser.hpp"
#include "grushin/operator_poly.hpp"
#include "grushin/reduction_engine.hpp"
#include "grushin/spectral_core.hpp"
#include "grushin/symbol_lab.hpp"

namespace grushin::io {

using Json = nlohmann::ordered_json;

inline Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

// A number, or [re, im].
inline cplx complex_from(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigurationError(what + ": expected a number or [re, im]");
}

template <class T>
T field(const Json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ConfigurationError(what + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigurationError(what + ": bad value for \"" + key + "\"");
  }
}

template <class T>
T field_or(const Json& j, const char* key, T fallback, const std::string& what) {
  return j.contains(key) ? field<T>(j, key, what) : fallback;
}

// A number or a "p/q" string.
inline double rational_from(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    try {
      const auto slash = s.find('/');
      if (slash == std::string::npos) return std::stod(s);
      return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    } catch (const std::exception&) {
    }
  }
  throw ConfigurationError(what + ": expected a number or \"p/q\"");
}

inline Json to_json(const Grid& g) { return Json{{"T", g.T}, {"N", g.N}}; }

inline Grid grid_from(const Json& j) {
  Grid g;
  g.T = field_or<double>(j, "T", 0.0, "grid");
  g.N = field_or<std::size_t>(j, "N", g.N, "grid");
  g.validate();
  return g;
}

inline Json to_json(const OscillatorSpec& s) {
  return Json{{"h", s.h}, {"c2", s.c2}, {"c1", to_json(s.c1)}, {"grid", to_json(s.grid)}};
}

inline OscillatorSpec spec_from(const Json& j) {
  if (!j.is_object()) throw ConfigurationError("oscillator spec must be an object");
  OscillatorSpec s;
  s.h = field<int>(j, "h", "spec");
  s.c2 = field<double>(j, "c2", "spec");
  s.c1 = j.contains("c1") ? complex_from(j["c1"], "spec c1") : cplx(0.0);
  if (j.contains("grid")) s.grid = grid_from(j["grid"]);
  s.validate();
  return s;
}

inline Json to_json(const OperatorPoly& op) {
  Json out = Json::array();
  for (const auto& t : op.terms()) out.push_back({{"alpha", t.alpha}, {"beta", t.beta}, {"coeff", to_json(t.coeff)}});
  return out;
}

inline OperatorPoly operator_from(const Json& j) {
  if (!j.is_array()) throw ConfigurationError("operator must be a list of terms");
  OperatorPoly op;
  for (const auto& t : j) {
    const int a = field<int>(t, "alpha", "operator term"), b = field<int>(t, "beta", "operator term");
    if (a < 0 || b < 0) throw ConfigurationError("operator term: negative power");
    op.add(a, b, complex_from(t.at("coeff"), "operator term coeff"));
  }
  return op;
}

inline TransversalSymbols transversal_from(const Json& j) {
  TransversalSymbols s;
  s.x0 = field<RVector>(j, "x0", "transversal");
  s.xi0 = field<RVector>(j, "xi0", "transversal");
  if (s.x0.empty() || s.x0.size() != s.xi0.size()) throw ConfigurationError("transversal: x0 and xi0 must have equal nonzero length");
  const int dim = static_cast<int>(s.x0.size());
  s.a_text = field<std::string>(j, "a", "transversal");
  s.b1_text = field<std::string>(j, "b1", "transversal");
  const expr::Expr a = expr::parse(s.a_text, expr::Mode::NumericSymbol, dim);
  const expr::Expr b = expr::parse(s.b1_text, expr::Mode::NumericSymbol, dim);
  if (a.uses_eta()) throw ConfigurationError("transversal: a must not depend on xi'");
  const RVector unit = s.xi0;
  s.a = [a, unit](const RVector& y) { return expr::evaluate(a, y, unit); };
  s.b1 = [b](const RVector& y, const RVector& e) { return expr::evaluate(b, y, e); };
  return s;
}

// Either explicit Taylor data or {"preset": "kohn" | "squares" | "gilioli" | "tangential", ...}.
inline CoefficientModel model_from(const Json& j) {
  if (!j.is_object()) throw ConfigurationError("model must be an object");
  CoefficientModel m;
  const std::string preset = field_or<std::string>(j, "preset", "", "model");
  if (preset == "kohn") {
    m = kohn_model(field<int>(j, "h", "kohn"), field<int>(j, "k", "kohn"), field_or<double>(j, "a", 1.0, "kohn"),
                   field_or<double>(j, "b", 1.0, "kohn"));
  } else if (preset == "squares") {
    m = squares_model(field<int>(j, "k1", "squares"), field<int>(j, "k2", "squares"));
  } else if (preset == "gilioli") {
    m = gilioli_treves_model(field<int>(j, "h", "gilioli"), field_or<double>(j, "a", 1.0, "gilioli"),
                             field<RVector>(j, "beta", "gilioli"), field_or<int>(j, "xi", 1, "gilioli"));
  } else if (preset == "tangential") {
    m.h = field<int>(j, "h", "tangential");
    m.tangential = true;
    m.transversal = transversal_from(field<Json>(j, "transversal", "tangential"));
    double n = 0.0;
    for (double v : m.transversal.xi0) n += v * v;
    if (n == 0.0) throw ConfigurationError("tangential: xi0 must be nonzero");
    m.xi_norm = 1.0;
    m.a_taylor = {m.transversal.a(m.transversal.x0).real() * n};
    m.b1_taylor = {m.transversal.b1(m.transversal.x0, m.transversal.xi0)};
    m.base_point = "x0, xi0 from transversal data";
  } else if (preset.empty()) {
    m.h = field<int>(j, "h", "model");
    m.a_taylor = field<RVector>(j, "a_taylor", "model");
    for (const auto& b : field<Json>(j, "b1_taylor", "model")) m.b1_taylor.push_back(complex_from(b, "model b1_taylor"));
    m.xi_norm = field_or<double>(j, "xi_norm", 1.0, "model");
    m.tangential = field_or<bool>(j, "tangential", false, "model");
    m.translation_invariant = field_or<bool>(j, "translation_invariant", false, "model");
    if (j.contains("extra_terms")) {
      for (const auto& [key, val] : j["extra_terms"].items()) {
        int r = 0;
        try {
          r = std::stoi(key);
        } catch (const std::exception&) {
          throw ConfigurationError("model extra_terms: keys must be integers");
        }
        m.extra_terms[r] = operator_from(val);
      }
    }
    if (j.contains("transversal")) m.transversal = transversal_from(j["transversal"]);
  } else {
    throw ConfigurationError("model: unknown preset \"" + preset + "\"");
  }
  if (j.contains("base_point") && j["base_point"].is_string()) m.base_point = j["base_point"].get<std::string>();
  m.validate();
  return m;
}

inline Json to_json(const CoefficientModel& m) {
  Json b1 = Json::array();
  for (const cplx& b : m.b1_taylor) b1.push_back(to_json(b));
  Json out{{"h", m.h}, {"a_taylor", m.a_taylor}, {"b1_taylor", b1}, {"xi_norm", m.xi_norm},
           {"base_point", m.base_point}, {"tangential", m.tangential}, {"translation_invariant", m.translation_invariant}};
  if (!m.extra_terms.empty()) {
    Json extra = Json::object();
    for (const auto& [r, op] : m.extra_terms) extra[std::to_string(r)] = to_json(op);
    out["extra_terms"] = extra;
  }
  if (m.transversal.available())
    out["transversal"] = {{"a", m.transversal.a_text}, {"b1", m.transversal.b1_text}, {"x0", m.transversal.x0}, {"xi0", m.transversal.xi0}};
  return out;
}

inline Json to_json(const EllTable& t) {
  Json ell = Json::array(), orders = Json::array(), certs = Json::array(), err = Json::array();
  for (int j = 0; j < 3; ++j) {
    const auto k = static_cast<std::size_t>(j);
    ell.push_back(to_json(t.ell[k]));
    orders.push_back(t.order(j));
    certs.push_back({{"structural_zero", t.certificates[k].structural_zero}, {"reason", t.certificates[k].reason}});
    err.push_back(t.error[k]);
  }
  return Json{{"h", t.h}, {"ell", ell}, {"orders", orders}, {"certificates", certs}, {"error", err},
              {"kernel", t.kernel}, {"kernel_index", t.kernel_index}, {"extrapolated", t.extrapolated},
              {"grid", to_json(t.grid)}};
}

inline Json to_json(const Verdict& v) {
  Json out{{"status", to_string(v.status)}};
  if (v.loss) {
    out["loss"] = {{"num", static_cast<long long>(numerator(*v.loss))}, {"den", static_cast<long long>(denominator(*v.loss))}};
  } else {
    out["loss"] = nullptr;
  }
  out["certificate"] = v.certificate;
  return out;
}

// Eigenvalues, errors, moments and kernel data; eigenfunctions stay out.
inline Json to_json(const SpectralSolution& s, int moments = 0) {
  Json ev = Json::array(), er = Json::array();
  for (std::size_t j = 0; j < s.requested; ++j) {
    ev.push_back(to_json(s.eigenvalues[j]));
    er.push_back(s.eigen_error[j]);
  }
  Json out{{"spec", to_json(s.spec)}, {"eigenvalues", ev}, {"eigen_error", er}, {"mu1", s.mu1}, {"mu2", s.mu2},
           {"kernel", s.has_kernel()}, {"kernel_index", s.kernel_index}, {"kernel_gap", s.kernel_gap},
           {"spectral_gap", s.spectral_gap}, {"grid", to_json(s.grid)}, {"extrapolated", s.extrapolated()}};
  if (moments > 0) {
    Json m = Json::array();
    for (int k = 0; k <= moments; ++k) m.push_back(to_json(moment(s, Which::phi1(), k)));
    out["phi1_moments"] = m;
  }
  return out;
}

inline SymbolField field_from(const Json& j) {
  if (!j.is_object()) throw ConfigurationError("symbol field must be an object");
  SymbolField f;
  f.y0 = field<RVector>(j, "y0", "field");
  f.eta0 = field<RVector>(j, "eta0", "field");
  f.dim = static_cast<int>(f.y0.size());
  if (f.dim < 1) throw ConfigurationError("field: y0 must not be empty");
  f.h = field<int>(j, "h", "field");
  f.r = field_or<int>(j, "r", f.h % 2 == 0 ? 1 : 2, "field");
  f.m_prime = rational_from(field<Json>(j, "m_prime", "field"), "field m_prime");
  f.principal_text = field<std::string>(j, "principal", "field");
  const expr::Expr p = expr::parse(f.principal_text, expr::Mode::NumericSymbol, f.dim);
  f.principal = symbol_from_expr(p);
  if (j.contains("subprincipal")) {
    f.subprincipal_text = field<std::string>(j, "subprincipal", "field");
    f.subprincipal = symbol_from_expr(expr::parse(f.subprincipal_text, expr::Mode::NumericSymbol, f.dim));
  }
  if (j.contains("neighborhood")) {
    f.neighborhood.radius = field_or<double>(j["neighborhood"], "radius", f.neighborhood.radius, "neighborhood");
    f.neighborhood.points = field_or<int>(j["neighborhood"], "points", f.neighborhood.points, "neighborhood");
  }
  f.gap_clause = field_or<bool>(j, "gap_clause", false, "field");
  f.validate_shape();
  return f;
}

inline Json to_json(const CheckReport& r) {
  Json out{{"pass", r.pass},         {"h1_pass", r.h1_pass}, {"h1_value", r.h1_value},
           {"c", r.c},               {"samples", r.samples}, {"grid_spacing", r.grid_spacing},
           {"min_q", std::isfinite(r.min_q) ? Json(r.min_q) : Json(nullptr)},
           {"necessary_failure", r.necessary_failure}, {"note", r.note}};
  if (r.violation)
    out["violation"] = {{"y", r.violation->y}, {"eta", r.violation->eta}, {"principal", to_json(r.violation->principal)},
                        {"sub", to_json(r.violation->sub)}};
  return out;
}

inline Json to_json(const ProbeReport& r) {
  return Json{{"t", r.t_values},
              {"norm_sq", r.norms_sq},
              {"slope", r.slope},
              {"predicted_slope", r.predicted_slope},
              {"fit_residual", r.residual},
              {"prefactor", r.prefactor},
              {"predicted_prefactor", r.predicted_prefactor},
              {"regime", r.regime},
              {"conclusive", r.conclusive}};
}

}  // namespace grushin::io
