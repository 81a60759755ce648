#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/grid.hpp"
#include "grushin/linalg.hpp"

namespace grushin {

inline double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// D_t^2 + c2 t^{2h} + c1 t^{h-1}.
struct OscillatorSpec {
  int h = 1;
  double c2 = 1.0;
  cplx c1{0.0, 0.0};
  Grid grid{};

  bool self_adjoint() const { return c1.imag() == 0.0; }

  void validate() const {
    if (h < 1) throw ConfigurationError("h must be a positive integer");
    if (!(c2 > 0.0) || !std::isfinite(c2)) throw ConfigurationError("c2 must be positive");
    if (!std::isfinite(c1.real()) || !std::isfinite(c1.imag())) throw ConfigurationError("c1 must be finite");
    grid.validate();
  }

  // |xi'| -> s |xi'|.
  OscillatorSpec scaled(double s) const {
    OscillatorSpec out = *this;
    out.c2 = s * s * c2;
    out.c1 = s * c1;
    out.grid.T = 0.0;
    return out;
  }
};

inline CBand build_matrix(const OscillatorSpec& spec) {
  spec.validate();
  if (!spec.grid.resolved()) throw ConfigurationError("grid half-width T is unresolved");
  const std::size_t n = spec.grid.N;
  const double dx = spec.grid.spacing();
  const RVector t = spec.grid.points();
  const double off = -1.0 / (dx * dx);
  CBand m(n, 1, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Index>(k);
    m.ref(i, i) = 2.0 / (dx * dx) + spec.c2 * ipow(t[k], 2 * spec.h) + spec.c1 * ipow(t[k], spec.h - 1);
    if (k + 1 < n) {
      m.ref(i, i + 1) = off;
      m.ref(i + 1, i) = off;
    }
  }
  return m;
}

// Values of c1 at which lambda_{j0} vanishes for c2 = a * xi^2.
inline std::vector<cplx> critical_b1(int h, int j0, double a, double xi_norm) {
  if (h < 1 || j0 < 0) throw DomainError("critical_b1 needs h >= 1 and j0 >= 0");
  if (!(a > 0.0) || !(xi_norm > 0.0)) throw DomainError("critical_b1 needs a > 0 and |xi| > 0");
  const double root = std::sqrt(a) * xi_norm;
  if (h % 2 == 0) {
    const double v = root * (h + 1) * (2 * j0 + 1);
    return {cplx(v, 0.0), cplx(-v, 0.0)};
  }
  const int theta = (j0 % 2 == 0) ? 1 : 0;
  const double sign = (j0 % 2 == 0) ? 1.0 : -1.0;
  return {cplx((sign - (h + 1) * (j0 + theta)) * root, 0.0)};
}

// Semiclassical estimate of the j-th eigenvalue of D^2 + c2 t^{2h}.
inline double wkb_eigenvalue(int h, double c2, int j) {
  const double ih = std::beta(1.0 / (2.0 * h), 1.5) / (2.0 * h);
  const double base = M_PI * (j + 0.5) * std::pow(c2, 1.0 / (2.0 * h)) / (2.0 * ih);
  return std::pow(base, 2.0 * h / (h + 1.0));
}

// Solves c2 T^{2h} = 20 max(|c1| T^{h-1}, lambda_target) for T.
inline double auto_half_width(const OscillatorSpec& spec, double lambda_target) {
  const double h = spec.h;
  const double from_c1 = std::pow(20.0 * std::abs(spec.c1) / spec.c2, 1.0 / (h + 1.0));
  const double from_target = std::pow(20.0 * std::max(lambda_target, 1e-12) / spec.c2, 1.0 / (2.0 * h));
  return std::max({from_c1, from_target, 1.0});
}

struct Which {
  enum Kind { Phi1, Phi2, Eigen };
  Kind kind = Phi1;
  std::size_t index = 0;

  static Which phi1() { return {Phi1, 0}; }
  static Which phi2() { return {Phi2, 0}; }
  static Which eigen(std::size_t j) { return {Eigen, j}; }
};

// Eigen-data on one grid.
struct LevelSolution {
  OscillatorSpec spec;
  RVector t;
  CVector eigenvalues;
  std::vector<CVector> eigenfunctions;
  RVector residuals;
  double mu1 = 0.0;
  double mu2 = 0.0;
  CVector phi1;
  CVector phi2;
  std::size_t kernel_index = 0;

  double dx() const { return spec.grid.spacing(); }

  const CVector& function(const Which& w) const {
    switch (w.kind) {
      case Which::Phi1:
        return phi1;
      case Which::Phi2:
        return phi2;
      default:
        if (w.index >= eigenfunctions.size()) throw ConfigurationError("eigenfunction index out of range");
        return eigenfunctions[w.index];
    }
  }
};

struct SpectralOptions {
  double convergence_tol = 1e-3;  // on |fine - coarse| relative to max(1, |lambda|)
  double tail_tol = 1e-10;        // eigenfunction magnitude near +-T, relative to its peak
  bool refine = true;             // second grid and Richardson extrapolation
  int max_enlargements = 12;
};

struct SpectralSolution {
  OscillatorSpec spec;  // with resolved coarse grid
  std::size_t requested = 0;
  Grid grid;  // grid of the stored functions (finest)
  RVector t;
  CVector eigenvalues;  // extrapolated when refine is on
  RVector eigen_error;  // |fine - coarse| / 3, or the residual on a single grid
  std::vector<CVector> eigenfunctions;
  double mu1 = 0.0;
  double mu2 = 0.0;
  CVector phi1;
  CVector phi2;
  double kernel_gap = 0.0;    // distance from 0 to the nearest eigenvalue
  std::size_t kernel_index = 0;
  double spectral_gap = 0.0;  // distance from that eigenvalue to its neighbours
  std::vector<LevelSolution> levels;  // coarse first

  const LevelSolution& fine() const { return levels.back(); }
  bool extrapolated() const { return levels.size() > 1; }
  double dx() const { return grid.spacing(); }

  // Zero-eigenvalue decision: |lambda| < 1e-3 * gap.
  bool has_kernel() const { return kernel_gap < 1e-3 * spectral_gap; }
};

namespace detail {

// Largest-modulus entry made real positive.
inline void fix_phase(CVector& v) {
  std::size_t arg = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (std::abs(v[k]) > std::abs(v[arg]) * (1.0 + 1e-12)) arg = k;
  if (std::abs(v[arg]) == 0.0) return;
  const cplx rot = std::conj(v[arg]) / std::abs(v[arg]);
  for (auto& x : v) x *= rot;
}

// Projects onto the dominant parity class; keeps the phase convention.
inline void fix_parity(CVector& v, double dx) {
  const CVector r = reflect(v);
  CVector even(v.size()), odd(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    even[k] = 0.5 * (v[k] + r[k]);
    odd[k] = 0.5 * (v[k] - r[k]);
  }
  v = l2_norm(even, dx) >= l2_norm(odd, dx) ? even : odd;
  normalize(v, dx);
  fix_phase(v);
}

inline void finish_vector(CVector& v, const OscillatorSpec& spec, double dx) {
  normalize(v, dx);
  fix_phase(v);
  if (spec.h % 2 == 1) fix_parity(v, dx);
}

inline double residual(const CBand& m, const CVector& v, cplx lambda, double dx) {
  CVector r = m.apply(v);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= lambda * v[k];
  return l2_norm(r, dx);
}

inline cplx bilinear(const CVector& a, const CVector& b) {
  cplx s(0.0);
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Rayleigh quotient iteration for complex-symmetric M.
inline std::pair<cplx, CVector> rqi(const CBand& m, cplx lambda, CVector v) {
  const double floor = 128.0 * std::numeric_limits<double>::epsilon() * m.max_abs();
  for (int it = 0; it < 60; ++it) {
    CBand shifted = m;
    for (Index i = 0; i < static_cast<Index>(m.size()); ++i) shifted.ref(i, i) -= lambda;
    const BandLU<cplx> lu(shifted, true);
    CVector w = lu.solve(v);
    double s = 0.0;
    for (const auto& x : w) s += std::norm(x);
    s = std::sqrt(s);
    for (auto& x : w) x /= s;
    const cplx den = bilinear(w, w);
    if (std::abs(den) < 1e-8) throw DegeneracyError("complex-symmetric Rayleigh quotient: quasi-null vector");
    const cplx next = bilinear(w, m.apply(w)) / den;
    const double step = std::abs(next - lambda);
    lambda = next;
    v = std::move(w);
    if (step <= std::max(1e-13 * std::abs(lambda), floor)) break;
  }
  return {lambda, std::move(v)};
}

// Smallest eigenpair of A^dagger A (or A A^dagger) by inverse iteration with
// the two triangular-banded factorizations.
inline std::pair<double, CVector> smallest_gram(const CBand& m, CVector start, bool left, double dx) {
  const CBand mh = m.adjoint();
  const BandLU<cplx> lu(m, true);
  const BandLU<cplx> luh(mh, true);
  normalize(start, dx);
  double mu = std::numeric_limits<double>::infinity();
  CVector x = std::move(start);
  for (int it = 0; it < 500; ++it) {
    CVector y = left ? luh.solve(x) : lu.solve(x);
    CVector z = left ? lu.solve(y) : luh.solve(y);
    normalize(z, dx);
    const CVector image = left ? m.apply(z) : mh.apply(z);
    const double next = std::pow(l2_norm(image, dx), 2);
    x = std::move(z);
    const double change = std::abs(next - mu);
    mu = next;
    if (change <= 1e-14 * std::max(mu, 1e-300) || mu < 1e-28) break;
  }
  return {mu, std::move(x)};
}

inline void check_tail(const LevelSolution& level, double tol, bool& ok) {
  ok = true;
  const double T = level.spec.grid.T;
  for (const auto& v : level.eigenfunctions) {
    double peak = 0.0, tail = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      peak = std::max(peak, std::abs(v[k]));
      if (std::abs(level.t[k]) >= 0.95 * T) tail = std::max(tail, std::abs(v[k]));
    }
    if (tail > tol * peak) ok = false;
  }
}

}  // namespace detail

// Eigen-data on exactly spec.grid: the first `total` eigenpairs, phi1/phi2, mu1/mu2.
inline LevelSolution solve_level(const OscillatorSpec& spec, std::size_t total) {
  const CBand m = build_matrix(spec);
  const std::size_t n = spec.grid.N;
  total = std::min(std::max<std::size_t>(total, 1), n);
  LevelSolution out;
  out.spec = spec;
  out.t = spec.grid.points();
  const double dx = spec.grid.spacing();

  RVector diag(n), off(n - 1);
  for (std::size_t k = 0; k < n; ++k) diag[k] = m(static_cast<Index>(k), static_cast<Index>(k)).real();
  for (std::size_t k = 0; k + 1 < n; ++k) off[k] = m(static_cast<Index>(k), static_cast<Index>(k + 1)).real();
  const SymTridiagonal tri(diag, off);

  RVector lam(total);
  std::vector<RVector> vecs;
  vecs.reserve(total);
  for (std::size_t j = 0; j < total; ++j) {
    lam[j] = tri.eigenvalue(j);
    std::vector<const RVector*> near;
    for (std::size_t i = 0; i < j; ++i)
      if (std::abs(lam[i] - lam[j]) < 1e-7 * tri.norm()) near.push_back(&vecs[i]);
    vecs.push_back(tri.eigenvector(lam[j], near));
  }

  if (spec.self_adjoint()) {
    for (std::size_t j = 0; j < total; ++j) {
      CVector v(vecs[j].begin(), vecs[j].end());
      detail::finish_vector(v, spec, dx);
      out.eigenvalues.emplace_back(lam[j], 0.0);
      out.residuals.push_back(detail::residual(m, v, lam[j], dx));
      out.eigenfunctions.push_back(std::move(v));
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < total; ++j)
      if (std::abs(lam[j]) < std::abs(lam[best])) best = j;
    out.kernel_index = best;
    out.phi1 = out.phi2 = out.eigenfunctions[best];
    out.mu1 = out.mu2 = lam[best] * lam[best];
    return out;
  }

  // Continuation in Im c1 from the self-adjoint problem, RQI at each step.
  CVector ev(total);
  std::vector<CVector> ef(total);
  for (int steps = 8;; steps *= 2) {
    if (steps > 512) throw DegeneracyError("eigenvalue continuation failed to separate branches");
    for (std::size_t j = 0; j < total; ++j) {
      ev[j] = lam[j];
      ef[j] = CVector(vecs[j].begin(), vecs[j].end());
    }
    bool clean = true;
    for (int s = 1; s <= steps && clean; ++s) {
      OscillatorSpec stage = spec;
      stage.c1 = cplx(spec.c1.real(), spec.c1.imag() * s / steps);
      const CBand ms = build_matrix(stage);
      for (std::size_t j = 0; j < total; ++j) {
        auto [l, v] = detail::rqi(ms, ev[j], ef[j]);
        ev[j] = l;
        ef[j] = std::move(v);
      }
      double scale = 1.0;
      for (const auto& l : ev) scale = std::max(scale, std::abs(l));
      for (std::size_t a = 0; a < total && clean; ++a)
        for (std::size_t b = a + 1; b < total; ++b)
          if (std::abs(ev[a] - ev[b]) < 1e-6 * scale) {
            clean = false;
            break;
          }
    }
    if (clean) break;
  }
  for (std::size_t j = 0; j < total; ++j) {
    CVector v = ef[j];
    detail::finish_vector(v, spec, dx);
    out.residuals.push_back(detail::residual(m, v, ev[j], dx));
    out.eigenvalues.push_back(ev[j]);
    out.eigenfunctions.push_back(std::move(v));
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < total; ++j)
    if (std::abs(ev[j]) < std::abs(ev[best])) best = j;
  out.kernel_index = best;

  CVector p1 = detail::smallest_gram(m, out.eigenfunctions[best], true, dx).second;
  CVector p2 = detail::smallest_gram(m, out.eigenfunctions[best], false, dx).second;
  detail::finish_vector(p1, spec, dx);
  detail::finish_vector(p2, spec, dx);
  // Recompute from the final vectors so mu matches phi exactly.
  out.mu1 = std::pow(l2_norm(m.apply(p1), dx), 2);
  out.mu2 = std::pow(l2_norm(m.adjoint().apply(p2), dx), 2);
  out.phi1 = std::move(p1);
  out.phi2 = std::move(p2);
  return out;
}

// Number of eigenvalues of the real part below zero, used to make sure the
// eigenvalue nearest zero and its neighbours are included.
inline std::size_t eigen_budget(const OscillatorSpec& spec, std::size_t count) {
  const CBand m = build_matrix(spec);
  const std::size_t n = spec.grid.N;
  RVector diag(n), off(n - 1);
  for (std::size_t k = 0; k < n; ++k) diag[k] = m(static_cast<Index>(k), static_cast<Index>(k)).real();
  for (std::size_t k = 0; k + 1 < n; ++k) off[k] = m(static_cast<Index>(k), static_cast<Index>(k + 1)).real();
  const SymTridiagonal tri(diag, off);
  const std::size_t below = tri.count_below(0.0);
  return std::min(n, std::max(count, below + 2));
}

inline SpectralSolution eigenpairs(const OscillatorSpec& input, std::size_t count,
                                   const SpectralOptions& opt = {}) {
  if (count < 1) throw ConfigurationError("eigenpairs: count must be at least 1");
  input.validate();
  OscillatorSpec spec = input;
  const bool auto_t = !spec.grid.resolved();
  LevelSolution coarse;
  std::size_t total = 0;
  for (int attempt = 0;; ++attempt) {
    if (auto_t && attempt == 0) {
      const double target = wkb_eigenvalue(spec.h, spec.c2, static_cast<int>(count) + 1);
      spec.grid.T = auto_half_width(spec, target);
    }
    total = eigen_budget(spec, count);
    coarse = solve_level(spec, total);
    if (!auto_t) break;
    bool ok = true;
    detail::check_tail(coarse, opt.tail_tol, ok);
    if (ok) break;
    if (attempt >= opt.max_enlargements)
      throw AccuracyError("eigenfunctions do not decay inside the auto-sized domain", spec.grid.T, spec.grid.T);
    spec.grid.T *= 1.25;
  }

  SpectralSolution out;
  out.spec = spec;
  out.requested = count;
  out.levels.push_back(std::move(coarse));
  if (opt.refine) {
    OscillatorSpec fine = spec;
    fine.grid = spec.grid.refined();
    out.levels.push_back(solve_level(fine, total));
  }
  const LevelSolution& f = out.levels.back();
  out.grid = f.spec.grid;
  out.t = f.t;
  out.eigenfunctions = f.eigenfunctions;
  out.mu1 = f.mu1;
  out.mu2 = f.mu2;
  out.phi1 = f.phi1;
  out.phi2 = f.phi2;
  if (opt.refine) {
    const LevelSolution& c = out.levels.front();
    for (std::size_t j = 0; j < total; ++j) {
      const cplx lf = f.eigenvalues[j], lc = c.eigenvalues[j];
      const cplx lr = (4.0 * lf - lc) / 3.0;
      const double diff = std::abs(lf - lc);
      if (diff > opt.convergence_tol * std::max(1.0, std::abs(lr)))
        throw AccuracyError("eigenvalue " + std::to_string(j) + " did not converge between grids N and 2N+1",
                            std::abs(lc), std::abs(lf));
      out.eigenvalues.push_back(lr);
      out.eigen_error.push_back(diff / 3.0);
    }
  } else {
    out.eigenvalues = f.eigenvalues;
    out.eigen_error = f.residuals;
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < total; ++j)
    if (std::abs(out.eigenvalues[j]) < std::abs(out.eigenvalues[best])) best = j;
  out.kernel_index = best;
  out.kernel_gap = std::abs(out.eigenvalues[best]);
  double gap = std::numeric_limits<double>::infinity();
  if (best > 0) gap = std::min(gap, std::abs(out.eigenvalues[best] - out.eigenvalues[best - 1]));
  if (best + 1 < total) gap = std::min(gap, std::abs(out.eigenvalues[best + 1] - out.eigenvalues[best]));
  out.spectral_gap = gap;
  return out;
}

// <t^k phi, phi>; Richardson-extrapolated across the two grids when available.
inline cplx moment(const SpectralSolution& sol, const Which& which, int k, bool extrapolate = true) {
  if (k < 0) throw DomainError("moment order must be nonnegative");
  auto on_level = [&](const LevelSolution& level) {
    const CVector& v = level.function(which);
    cplx s(0.0);
    for (std::size_t i = 0; i < v.size(); ++i) s += ipow(level.t[i], k) * std::norm(v[i]);
    return level.dx() * s;
  };
  const cplx f = on_level(sol.fine());
  if (!extrapolate || !sol.extrapolated()) return f;
  return (4.0 * f - on_level(sol.levels.front())) / 3.0;
}

// <f, phi_side> phi_side on the solution grid.
inline CVector projector_apply(const SpectralSolution& sol, int side, const CVector& f) {
  if (side != 1 && side != 2) throw DomainError("projector side must be 1 or 2");
  const CVector& phi = side == 1 ? sol.phi1 : sol.phi2;
  if (f.size() != phi.size()) throw ConfigurationError("projector: vector length does not match the grid");
  const cplx c = inner(f, phi, sol.dx());
  CVector out(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) out[k] = c * phi[k];
  return out;
}

// [[M, phi2], [<., phi1>, 0]] on one grid.
class BorderedSystem {
 public:
  explicit BorderedSystem(const LevelSolution& level)
      : dx_(level.dx()), lu_(make(level)) {}

  // Solves M u + theta phi2 = f, <u, phi1> = g.
  std::pair<CVector, cplx> solve(const CVector& f, cplx g) const {
    return lu_.solve(f, g / dx_);
  }

  // Partial inverse E f.
  CVector partial_inverse(const CVector& f) const { return solve(f, 0.0).first; }

 private:
  static BorderedLU make(const LevelSolution& level) {
    const CBand m = build_matrix(level.spec);
    CVector row(level.phi1.size());
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = std::conj(level.phi1[k]);
    return BorderedLU(m, level.phi2, row, 0.0);
  }

  double dx_;
  BorderedLU lu_;
};

inline std::pair<CVector, cplx> bordered_solve(const SpectralSolution& sol, const CVector& f, cplx g) {
  if (f.size() != sol.grid.N) throw ConfigurationError("bordered_solve: vector length does not match the grid");
  return BorderedSystem(sol.fine()).solve(f, g);
}

// Single-grid variant on exactly spec.grid (T must be resolved).
inline std::pair<CVector, cplx> bordered_solve(const OscillatorSpec& spec, const CVector& f, cplx g) {
  if (f.size() != spec.grid.N) throw ConfigurationError("bordered_solve: vector length does not match the grid");
  const LevelSolution level = solve_level(spec, eigen_budget(spec, 1));
  return BorderedSystem(level).solve(f, g);
}

struct HomogeneityReport {
  double s = 1.0;
  double mu1_base = 0.0;
  double mu1_scaled = 0.0;
  double mu1_expected_ratio = 1.0;
  double mu1_deviation = 0.0;  // relative; absolute scaled mu1 when the base mu1 vanishes
  double lambda_expected_ratio = 1.0;
  RVector lambda_ratios;
  double lambda_deviation = 0.0;  // max relative deviation
};

inline HomogeneityReport homogeneity_check(const OscillatorSpec& spec, double s, std::size_t count = 3,
                                           const SpectralOptions& opt = {}) {
  if (!(s > 1.0)) throw DomainError("homogeneity_check needs s > 1");
  OscillatorSpec base = spec;
  base.grid.T = 0.0;
  const SpectralSolution a = eigenpairs(base, count, opt);
  const SpectralSolution b = eigenpairs(spec.scaled(s), count, opt);
  HomogeneityReport r;
  r.s = s;
  r.mu1_base = a.mu1;
  r.mu1_scaled = b.mu1;
  r.mu1_expected_ratio = std::pow(s, 4.0 / (spec.h + 1));
  r.lambda_expected_ratio = std::pow(s, 2.0 / (spec.h + 1));
  if (a.mu1 < 1e-12) {
    r.mu1_deviation = b.mu1;
  } else {
    r.mu1_deviation = std::abs(b.mu1 / a.mu1 - r.mu1_expected_ratio) / r.mu1_expected_ratio;
  }
  for (std::size_t j = 0; j < count; ++j) {
    const cplx la = a.eigenvalues[j], lb = b.eigenvalues[j];
    if (std::abs(la) < 1e-9) {
      r.lambda_ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      r.lambda_deviation = std::max(r.lambda_deviation, std::abs(lb));
      continue;
    }
    const cplx ratio = lb / la;
    r.lambda_ratios.push_back(ratio.real());
    r.lambda_deviation = std::max(r.lambda_deviation, std::abs(ratio - r.lambda_expected_ratio) / r.lambda_expected_ratio);
  }
  return r;
}

}  // namespace grushin
