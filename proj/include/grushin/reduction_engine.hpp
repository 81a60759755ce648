#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/operator_poly.hpp"
#include "grushin/spectral_core.hpp"

namespace grushin {

struct VanishCertificate {
  bool structural_zero = false;
  std::string reason;  // "operator-zero", "parity", "tangential" or empty
};

// l_{2/(h+1) - j/(h+1)} for j = 0, 1, 2 at one base point.
struct EllTable {
  int h = 2;
  std::array<cplx, 3> ell{};
  std::array<cplx, 3> ell_raw{};  // finest grid, no extrapolation
  std::array<double, 3> error{};
  std::array<VanishCertificate, 3> certificates{};
  Grid grid;  // finest grid used
  bool extrapolated = false;
  bool self_adjoint = true;
  bool kernel = false;  // lambda_{j0} decided zero at the base point
  std::size_t kernel_index = 0;
  double eigen_residual = 0.0;
  bool translation_invariant = false;

  // Order of entry j as a reduced fraction string.
  std::string order(int j) const {
    int num = 2 - j, den = h + 1;
    if (num == 0) return "0";
    const int g = std::gcd(std::abs(num), den);
    num /= g;
    den /= g;
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

  // Within 3x its error estimate of zero, and not certified zero.
  bool indistinct(int j) const {
    return !certificates[static_cast<std::size_t>(j)].structural_zero &&
           std::abs(ell[static_cast<std::size_t>(j)]) <= 3.0 * error[static_cast<std::size_t>(j)];
  }
  bool is_zero(int j) const { return certificates[static_cast<std::size_t>(j)].structural_zero; }
  bool nonzero(int j) const {
    return !is_zero(j) && std::abs(ell[static_cast<std::size_t>(j)]) > 3.0 * error[static_cast<std::size_t>(j)];
  }
};

namespace detail {

// +1 even, -1 odd, 0 neither (exact reflection check after symmetrization).
inline int vector_parity(const CVector& v) {
  const CVector r = reflect(v);
  double scale = 0.0, even = 0.0, odd = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    scale = std::max(scale, std::abs(v[k]));
    even = std::max(even, std::abs(v[k] - r[k]));
    odd = std::max(odd, std::abs(v[k] + r[k]));
  }
  if (even <= 1e-13 * scale) return 1;
  if (odd <= 1e-13 * scale) return -1;
  return 0;
}

inline int op_parity(const OperatorPoly& op) {
  switch (parity_of(op)) {
    case Parity::Even:
      return 1;
    case Parity::Odd:
      return -1;
    default:
      return 0;
  }
}

struct EllLevel {
  std::array<cplx, 3> ell{};
  double residual = 0.0;
};

inline EllLevel ell_on_level(const LevelSolution& level, const OperatorPoly& p2, const OperatorPoly& p3,
                             const OperatorPoly& p4) {
  const Grid& g = level.spec.grid;
  const double dx = g.spacing();
  const CBand m2 = to_matrix(p2, g);
  const CBand m3 = to_matrix(p3, g);
  const CBand m4 = to_matrix(p4, g);
  const CVector& f1 = level.phi1;
  const CVector& f2 = level.phi2;
  EllLevel out;
  out.ell[0] = inner(m2.apply(f1), f2, dx);
  const CVector p3f1 = m3.apply(f1);
  out.ell[1] = inner(p3f1, f2, dx);
  const BorderedSystem bordered(level);
  const CVector e = bordered.partial_inverse(p3f1);
  out.ell[2] = inner(m4.apply(f1), f2, dx) - inner(e, m3.adjoint().apply(f2), dx);
  // Singular-vector residual: |M phi1 - <M phi1, phi2> phi2|.
  CVector r = m2.apply(f1);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= out.ell[0] * f2[k];
  out.residual = l2_norm(r, dx);
  return out;
}

}  // namespace detail

struct EllOptions {
  SpectralOptions spectral{};
  Grid grid{};  // T = 0 selects auto-sizing
  bool allow_h1 = false;  // only sound when the symbols do not depend on x'
};

inline EllTable ell_symbols(const CoefficientModel& model, const EllOptions& opt = {}) {
  model.validate();
  if (model.h == 1 && !opt.allow_h1)
    throw UnsupportedCaseError("ell_symbols needs h >= 2; for h = 1 use the closed-form eigenvalues (2j+1)sqrt(a)|xi| + b1");
  const OperatorPoly p2 = localized_operator(model, 0);
  const OperatorPoly p3 = localized_operator(model, 1);
  const OperatorPoly p4 = localized_operator(model, 2);
  if (p2.max_beta() > 2 || p3.max_beta() > 2 || p4.max_beta() > 2)
    throw UnsupportedCaseError("localized operators with D_t powers above 2 are not supported");

  const SpectralSolution sol = eigenpairs(model.base_spec(opt.grid), 1, opt.spectral);
  EllTable table;
  table.h = model.h;
  table.grid = sol.grid;
  table.self_adjoint = sol.spec.self_adjoint();
  table.kernel = sol.has_kernel();
  table.kernel_index = sol.kernel_index;
  table.translation_invariant = model.translation_invariant;

  const detail::EllLevel fine = detail::ell_on_level(sol.fine(), p2, p3, p4);
  table.ell_raw = fine.ell;
  table.eigen_residual = fine.residual;
  const double dx = sol.grid.spacing();
  const double floor = std::max(fine.residual, 10.0 * dx * dx);
  // Richardson only where the phase convention is grid-independent.
  if (sol.extrapolated() && table.self_adjoint) {
    const detail::EllLevel coarse = detail::ell_on_level(sol.levels.front(), p2, p3, p4);
    for (std::size_t j = 0; j < 3; ++j) {
      table.ell[j] = (4.0 * fine.ell[j] - coarse.ell[j]) / 3.0;
      table.error[j] = std::max(floor, std::abs(fine.ell[j] - coarse.ell[j]) / 3.0);
    }
    table.extrapolated = true;
  } else {
    table.ell = fine.ell;
    table.error.fill(floor);
  }

  // Structural zeros.
  const int s1 = detail::vector_parity(sol.phi1), s2 = detail::vector_parity(sol.phi2);
  const int q3 = detail::op_parity(p3), q4 = detail::op_parity(p4);
  const bool phis = s1 != 0 && s2 != 0;
  const bool tangential = model.is_tangential();
  auto mark = [&](std::size_t j, const char* why) {
    table.certificates[j] = {true, why};
    table.ell[j] = 0.0;
  };
  if (tangential) {
    mark(1, "tangential");
    mark(2, "tangential");
  } else {
    const bool p3_zero = p3.is_zero();
    const bool p3_parity = phis && q3 != 0 && q3 * s1 * s2 == -1;
    if (p3_zero) {
      mark(1, "operator-zero");
    } else if (p3_parity) {
      mark(1, "parity");
    }
    // Second term: E keeps parity, so it pairs P3 phi1 with P3* phi2 of parity s1*s2.
    const bool second_zero = p3_zero || (phis && s1 * s2 == -1);
    const bool first_zero = p4.is_zero() || (phis && q4 != 0 && q4 * s1 * s2 == -1);
    if (first_zero && second_zero) mark(2, p4.is_zero() && p3_zero ? "operator-zero" : "parity");
  }
  return table;
}

struct TangentialReport {
  cplx ell1{};
  cplx ell2{};
  cplx ell1_computed{};  // before structural certification
  cplx ell2_computed{};
  bool vanishes = false;
};

inline TangentialReport tangential_vanishing_check(const CoefficientModel& model, const EllOptions& opt = {}) {
  if (!model.is_tangential()) throw PreconditionError("model is not tangential: x1-dependent coefficients present");
  EllTable t = ell_symbols(model, opt);
  TangentialReport r;
  r.ell1 = t.ell[1];
  r.ell2 = t.ell[2];
  r.ell1_computed = t.ell_raw[1];
  r.ell2_computed = t.ell_raw[2];
  r.vanishes = std::abs(r.ell1_computed) <= 1e-8 && std::abs(r.ell2_computed) <= 1e-8;
  return r;
}

struct PerturbationReport {
  cplx prediction{};
  cplx exact{};
  std::size_t index = 0;
};

// First-order eigenvalue shift at a kernel point versus a fresh eigen-solve.
inline PerturbationReport perturbation_eigenvalue(const CoefficientModel& model, double delta_c2, cplx delta_c1,
                                                  const SpectralOptions& opt = {}) {
  const OscillatorSpec base = model.base_spec();
  const SpectralSolution sol = eigenpairs(base, 1, opt);
  if (!sol.has_kernel()) throw PreconditionError("perturbation_eigenvalue: base point has no kernel");
  const std::size_t j0 = sol.kernel_index;
  PerturbationReport r;
  r.index = j0;
  // Bilinear pairing, valid for the complex-symmetric matrix as well.
  auto bilinear_moment = [&](const LevelSolution& level, int k) {
    const CVector& v = level.eigenfunctions[j0];
    cplx num(0.0), den(0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      num += ipow(level.t[i], k) * v[i] * v[i];
      den += v[i] * v[i];
    }
    return num / den;
  };
  auto predicted = [&](const LevelSolution& level) {
    return delta_c2 * bilinear_moment(level, 2 * model.h) + delta_c1 * bilinear_moment(level, model.h - 1);
  };
  r.prediction = predicted(sol.fine());
  if (sol.extrapolated()) r.prediction = (4.0 * r.prediction - predicted(sol.levels.front())) / 3.0;
  if (delta_c2 == 0.0 && delta_c1 == cplx(0.0)) {
    r.exact = sol.eigenvalues[j0];
    return r;
  }
  OscillatorSpec moved = base;
  moved.c2 += delta_c2;
  moved.c1 += delta_c1;
  moved.grid = sol.spec.grid;  // same domain, so only the perturbation differs
  const SpectralSolution after = eigenpairs(moved, j0 + 1, opt);
  r.exact = after.eigenvalues[j0];
  return r;
}

}  // namespace grushin
