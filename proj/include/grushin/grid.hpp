#pragma once

#include <cmath>
#include <cstddef>

#include "grushin/errors.hpp"
#include "grushin/linalg.hpp"

namespace grushin {

// Uniform Dirichlet grid on [-T, T] with N interior points.
struct Grid {
  double T = 0.0;  // 0 selects auto-sizing
  std::size_t N = 2047;

  double spacing() const { return 2.0 * T / static_cast<double>(N + 1); }
  double point(std::size_t k) const { return -T + static_cast<double>(k + 1) * spacing(); }

  RVector points() const {
    RVector t(N);
    for (std::size_t k = 0; k < N; ++k) t[k] = point(k);
    // Exact symmetry, so reflection maps grid values onto grid values.
    for (std::size_t k = 0; k < N / 2; ++k) t[N - 1 - k] = -t[k];
    if (N % 2 == 1) t[N / 2] = 0.0;
    return t;
  }

  bool resolved() const { return T > 0.0; }

  // Halves the spacing on the same interval.
  Grid refined() const { return Grid{T, 2 * N + 1}; }

  void validate() const {
    if (N < 16) throw ConfigurationError("grid too coarse: N must be at least 16");
    if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigurationError("grid half-width must be finite and positive");
  }
};

// Discrete L2 pairing <f, g> = dx * sum f conj(g).
inline cplx inner(const CVector& f, const CVector& g, double dx) {
  cplx s(0.0);
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * std::conj(g[k]);
  return dx * s;
}

inline double l2_norm(const CVector& f, double dx) { return std::sqrt(std::max(0.0, inner(f, f, dx).real())); }

inline void normalize(CVector& f, double dx) {
  const double n = l2_norm(f, dx);
  if (n == 0.0) throw DegeneracyError("cannot normalize a zero vector");
  for (auto& v : f) v /= n;
}

// t -> -t on a symmetric grid.
inline CVector reflect(const CVector& f) { return CVector(f.rbegin(), f.rend()); }

}  // namespace grushin
