#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "grushin/spectral_core.hpp"

using namespace grushin;

namespace {

OscillatorSpec spec(int h, double c2, cplx c1, Grid g = {}) { return OscillatorSpec{h, c2, c1, g}; }

CVector random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  CVector v(n);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}

// Dense oracle on a modest grid.
Eigen::VectorXcd dense_eigenvalues(const OscillatorSpec& s) {
  const CBand m = build_matrix(s);
  const auto n = static_cast<Index>(m.size());
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = std::max<Index>(0, i - 1); j <= std::min<Index>(n - 1, i + 1); ++j) d(i, j) = m(i, j);
  return Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(d, false).eigenvalues();
}

double l2_distance(const CVector& a, const CVector& b, double dx) {
  CVector d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return l2_norm(d, dx);
}

}  // namespace

// ---- build_matrix ----------------------------------------------------------

TEST(BuildMatrix, HarmonicDiagonalFormula) {
  const OscillatorSpec s = spec(1, 1.0, 0.0, Grid{5.0, 63});
  const CBand m = build_matrix(s);
  const RVector t = s.grid.points();
  const double dx = s.grid.spacing();
  EXPECT_TRUE(m.is_hermitian());
  for (std::size_t k = 0; k < t.size(); ++k)
    EXPECT_NEAR(m(static_cast<Index>(k), static_cast<Index>(k)).real(), 2.0 / (dx * dx) + t[k] * t[k], 1e-9);
  EXPECT_DOUBLE_EQ(m(0, 1).real(), -1.0 / (dx * dx));
}

TEST(BuildMatrix, ComplexC1IsNotHermitian) {
  EXPECT_FALSE(build_matrix(spec(1, 1.0, cplx(0.0, 1.0), Grid{5.0, 63})).is_hermitian(1e-12));
  EXPECT_FALSE(spec(1, 1.0, cplx(0.0, 1.0)).self_adjoint());
}

TEST(BuildMatrix, CoarseGridRejected) {
  EXPECT_THROW(build_matrix(spec(1, 1.0, 0.0, Grid{5.0, 15})), ConfigurationError);
  EXPECT_THROW(eigenpairs(spec(1, -1.0, 0.0), 1), ConfigurationError);
}

TEST(BuildMatrix, CriticalH2HasNearZeroEigenvalueAtTwoResolutions) {
  // c2 = 4, c1 = -6 is critical for h = 2 with sqrt(a) = 2.
  auto smallest = [](const OscillatorSpec& s) {
    const CBand m = build_matrix(s);
    const auto n = static_cast<Index>(m.size());
    Eigen::VectorXd d(n), e(n - 1);
    for (Index i = 0; i < n; ++i) d(i) = m(i, i).real();
    for (Index i = 0; i + 1 < n; ++i) e(i) = m(i, i + 1).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().minCoeff();
  };
  const double coarse = smallest(spec(2, 4.0, -6.0, Grid{6.0, 512}));
  const double fine = smallest(spec(2, 4.0, -6.0, Grid{6.0, 1024}));
  EXPECT_LT(fine, 1e-3);
  EXPECT_LT(fine, coarse);
  const SpectralSolution sol = eigenpairs(spec(2, 4.0, -6.0, Grid{6.0, 1023}), 1);
  EXPECT_LT(std::abs(sol.eigenvalues[0]), 1e-6);
}

// ---- eigenpairs ------------------------------------------------------------

TEST(Eigenpairs, HarmonicOscillatorLevels) {
  const SpectralSolution sol = eigenpairs(spec(1, 1.0, 0.0), 3);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(sol.eigenvalues[static_cast<std::size_t>(j)].real(), 2.0 * j + 1.0, 1e-4 * (2 * j + 1));
}

TEST(Eigenpairs, GaussianKernel) {
  const SpectralSolution sol = eigenpairs(spec(1, 1.0, -1.0), 1);
  EXPECT_LT(std::abs(sol.eigenvalues[0]), 1e-6);
  CVector g(sol.t.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::pow(M_PI, -0.25) * std::exp(-0.5 * sol.t[k] * sol.t[k]);
  EXPECT_LT(l2_distance(sol.phi1, g, sol.dx()), 1e-4);
}

TEST(Eigenpairs, QuarticKernelH3) {
  const SpectralSolution sol = eigenpairs(spec(3, 1.0, -3.0), 1);
  EXPECT_LT(std::abs(sol.eigenvalues[0]), 1e-6);
  CVector g(sol.t.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::exp(-std::pow(sol.t[k], 4) / 4.0);
  normalize(g, sol.dx());
  EXPECT_LT(l2_distance(sol.phi1, g, sol.dx()), 1e-4);
}

TEST(Eigenpairs, EvenCriticalH2) {
  const SpectralSolution sol = eigenpairs(spec(2, 1.0, -3.0), 1);
  EXPECT_LT(std::abs(sol.eigenvalues[0]), 1e-6);
  EXPECT_TRUE(sol.has_kernel());
}

TEST(Eigenpairs, MatchesDenseOracleForNonSelfAdjoint) {
  const Grid g{7.0, 255};
  const SpectralSolution sol = eigenpairs(spec(2, 1.0, cplx(0.5, 0.7), g), 3, SpectralOptions{1e-3, 1e-10, false, 0});
  const Eigen::VectorXcd d = dense_eigenvalues(spec(2, 1.0, cplx(0.5, 0.7), g));
  for (std::size_t j = 0; j < 3; ++j) {
    double best = 1e300;
    for (Index k = 0; k < d.size(); ++k) best = std::min(best, std::abs(d(k) - sol.eigenvalues[j]));
    EXPECT_LT(best, 1e-9) << "eigenvalue " << j;
  }
}

TEST(Eigenpairs, ComplexShiftH1) {
  const SpectralSolution sol = eigenpairs(spec(1, 1.0, cplx(0.0, 1.0)), 3);
  for (int j = 0; j < 3; ++j)
    EXPECT_LT(std::abs(sol.eigenvalues[static_cast<std::size_t>(j)] - cplx(2.0 * j + 1.0, 1.0)), 1e-4);
  EXPECT_NEAR(sol.mu1, 2.0, 1e-3);
  EXPECT_NEAR(sol.mu2, 2.0, 1e-3);
  EXPECT_LT(std::abs(l2_norm(sol.phi1, sol.dx()) - 1.0), 1e-10);
}

TEST(Eigenpairs, AccuracyErrorCarriesBothEstimates) {
  // A tiny grid on a wide domain cannot converge.
  try {
    eigenpairs(spec(1, 1.0, 0.0, Grid{40.0, 31}), 3);
    FAIL() << "expected an accuracy error";
  } catch (const AccuracyError& e) {
    EXPECT_NE(e.coarse(), e.fine());
  }
}

TEST(Eigenpairs, CountMustBePositive) { EXPECT_THROW(eigenpairs(spec(1, 1.0, 0.0), 0), ConfigurationError); }

// ---- critical_b1 -----------------------------------------------------------

TEST(CriticalB1, Examples) {
  const auto even = critical_b1(2, 0, 1.0, 1.0);
  ASSERT_EQ(even.size(), 2u);
  EXPECT_DOUBLE_EQ(even[0].real(), 3.0);
  EXPECT_DOUBLE_EQ(even[1].real(), -3.0);
  const auto odd = critical_b1(3, 0, 1.0, 1.0);
  ASSERT_EQ(odd.size(), 1u);
  EXPECT_DOUBLE_EQ(odd[0].real(), -3.0);
  EXPECT_DOUBLE_EQ(critical_b1(1, 1, 1.0, 1.0)[0].real(), -3.0);
  EXPECT_THROW(critical_b1(1, -1, 1.0, 1.0), DomainError);
}

TEST(CriticalB1, HOneReducesToHarmonicLevels) {
  for (int j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(critical_b1(1, j, 4.0, 1.0)[0].real(), -(2.0 * j + 1.0) * 2.0);
}

// ---- moment / projector ----------------------------------------------------

TEST(Moment, GaussianSecondMoment) {
  const SpectralSolution sol = eigenpairs(spec(1, 1.0, -1.0), 1);
  EXPECT_NEAR(moment(sol, Which::phi1(), 2).real(), 0.5, 1e-6);
  EXPECT_NEAR(moment(sol, Which::phi1(), 0).real(), 1.0, 1e-10);
}

TEST(Moment, ParityKillsOddMoments) {
  const SpectralSolution sol = eigenpairs(spec(3, 1.0, 1.0), 3);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LT(std::abs(moment(sol, Which::eigen(j), 1)), 1e-12);
    EXPECT_LT(std::abs(moment(sol, Which::eigen(j), 3)), 1e-12);
  }
}

TEST(Projector, RangeKernelIdempotence) {
  const SpectralSolution sol = eigenpairs(spec(2, 1.0, -3.0), 1);
  const double dx = sol.dx();
  const CVector p = projector_apply(sol, 2, sol.phi2);
  EXPECT_LT(l2_distance(p, sol.phi2, dx), 1e-12);
  CVector f = random_vector(sol.phi2.size(), 3);
  const CVector pf = projector_apply(sol, 2, f);
  CVector orth(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) orth[k] = f[k] - pf[k];
  EXPECT_LT(l2_norm(projector_apply(sol, 2, orth), dx), 1e-12 * l2_norm(f, dx));
  EXPECT_LT(l2_distance(projector_apply(sol, 2, pf), pf, dx), 1e-12 * l2_norm(f, dx));
  EXPECT_THROW(projector_apply(sol, 3, f), DomainError);
}

// ---- bordered_solve --------------------------------------------------------

TEST(Bordered, UnitScalarGivesPhiAndMinusEll) {
  const SpectralSolution sol = eigenpairs(spec(1, 1.0, -1.0), 1);
  const auto [u, theta] = bordered_solve(sol, CVector(sol.phi1.size(), 0.0), 1.0);
  EXPECT_LT(l2_distance(u, sol.phi1, sol.dx()), 1e-8);
  const LevelSolution& lv = sol.fine();
  const cplx ell = inner(build_matrix(lv.spec).apply(lv.phi1), lv.phi2, lv.dx());
  EXPECT_LT(std::abs(theta + ell), 1e-10);
  EXPECT_LT(std::abs(ell), 1e-4);
}

TEST(Bordered, PhiTwoMapsToZero) {
  const SpectralSolution sol = eigenpairs(spec(2, 1.0, -3.0), 1);
  const auto [u, theta] = bordered_solve(sol, sol.phi2, 0.0);
  EXPECT_LT(l2_norm(u, sol.dx()), 1e-8);
  EXPECT_NEAR(std::abs(theta), 1.0, 1e-8);
}

TEST(Bordered, PartialInverseIdentities) {
  for (const auto& s : {spec(1, 1.0, -1.0), spec(2, 1.0, -3.0), spec(3, 1.0, -3.0), spec(1, 1.0, cplx(-1.0, 0.3))}) {
    const SpectralSolution sol = eigenpairs(s, 1);
    const LevelSolution& lv = sol.fine();
    const CBand m = build_matrix(lv.spec);
    const double dx = lv.dx();
    for (unsigned seed = 0; seed < 5; ++seed) {
      const CVector f = random_vector(lv.phi1.size(), seed);
      const CVector u = bordered_solve(sol, f, 0.0).first;
      CVector r = m.apply(u);
      const CVector p2 = projector_apply(sol, 2, f);
      for (std::size_t k = 0; k < r.size(); ++k) r[k] += p2[k] - f[k];
      const double nf = l2_norm(f, dx);
      EXPECT_LT(l2_norm(r, dx), 1e-8 * nf);
      EXPECT_LT(std::abs(inner(u, lv.phi1, dx)), 1e-8 * nf);
    }
  }
}

TEST(Bordered, SpecOverloadUsesGivenGrid) {
  const OscillatorSpec s = spec(1, 1.0, -1.0, Grid{8.0, 511});
  const auto [u, theta] = bordered_solve(s, CVector(511, 0.0), 1.0);
  EXPECT_EQ(u.size(), 511u);
  EXPECT_LT(std::abs(theta), 1e-3);
  EXPECT_THROW(bordered_solve(s, CVector(10, 0.0), 1.0), ConfigurationError);
}

// ---- homogeneity -----------------------------------------------------------

TEST(Homogeneity, HarmonicScalesLinearly) {
  const HomogeneityReport r = homogeneity_check(spec(1, 1.0, 0.0), 4.0);
  EXPECT_DOUBLE_EQ(r.lambda_expected_ratio, 4.0);
  EXPECT_LT(r.lambda_deviation, 1e-4);
  EXPECT_LT(r.mu1_deviation, 1e-4);
}

TEST(Homogeneity, KernelStaysKernel) {
  const HomogeneityReport r = homogeneity_check(spec(2, 1.0, -3.0), 2.0, 1);
  EXPECT_LT(r.mu1_base, 1e-10);
  EXPECT_LT(r.mu1_scaled, 1e-10);
}

TEST(Homogeneity, QuarticRatio) {
  const HomogeneityReport r = homogeneity_check(spec(3, 1.0, 1.0), 2.0, 1);
  EXPECT_NEAR(r.lambda_ratios[0], std::sqrt(2.0), 1e-3);
}

// ---- invariants ------------------------------------------------------------

TEST(Invariants, HarmonicAccuracyRawAndExtrapolated) {
  for (double c2 : {1.0, 4.0})
    for (double c1 : {0.0, -1.0, -3.0}) {
      const SpectralSolution sol = eigenpairs(spec(1, c2, c1), 6);
      for (std::size_t j = 0; j < 6; ++j) {
        const double exact = (2.0 * j + 1.0) * std::sqrt(c2) + c1;
        const double scale = std::max(1.0, std::abs(exact));
        EXPECT_LT(std::abs(sol.eigenvalues[j].real() - exact), 1e-4 * scale) << c2 << " " << c1 << " j=" << j;
        EXPECT_LT(std::abs(sol.fine().eigenvalues[j].real() - exact), 1e-3 * scale);
      }
    }
}

TEST(Invariants, KernelCertificates) {
  for (int h = 1; h <= 4; ++h)
    for (int j0 = 0; j0 <= 2; ++j0)
      for (const cplx& c1 : critical_b1(h, j0, 1.0, 1.0)) {
        const SpectralSolution sol = eigenpairs(spec(h, 1.0, c1), static_cast<std::size_t>(j0) + 2);
        const auto j = static_cast<std::size_t>(j0);
        EXPECT_LE(std::abs(sol.eigenvalues[j]), 1e-3 * std::abs(sol.eigenvalues[j + 1])) << h << " " << j0;
        EXPECT_EQ(sol.kernel_index, j);
        EXPECT_TRUE(sol.has_kernel());
      }
}

TEST(Invariants, SelfAdjointOrderingAndNormalization) {
  const SpectralSolution sol = eigenpairs(spec(4, 1.0, 2.5), 5);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(sol.eigenvalues[j].imag(), 0.0);
    EXPECT_NEAR(l2_norm(sol.eigenfunctions[j], sol.dx()), 1.0, 1e-10);
    if (j > 0) {
      EXPECT_LT(sol.eigenvalues[j - 1].real(), sol.eigenvalues[j].real());
    }
  }
  const double lmin = std::abs(sol.eigenvalues[0]);
  EXPECT_NEAR(sol.mu1, lmin * lmin, 1e-3 * lmin * lmin);
  EXPECT_NEAR(sol.mu2, sol.mu1, 1e-10);
}

TEST(Invariants, OddHParity) {
  for (int h : {1, 3, 5}) {
    const SpectralSolution sol = eigenpairs(spec(h, 1.0, 0.7), 4);
    for (const auto& v : sol.eigenfunctions) {
      const CVector r = reflect(v);
      double even = 0.0, odd = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        even += std::norm(v[k] - r[k]);
        odd += std::norm(v[k] + r[k]);
      }
      EXPECT_LE(std::sqrt(std::min(even, odd) * sol.dx()), 1e-6);
    }
  }
}

TEST(Invariants, ScalingIdentity) {
  for (int h : {1, 2, 3})
    for (const cplx& c1 : critical_b1(h, 0, 1.0, 1.0)) {
      const SpectralSolution sol = eigenpairs(spec(h, 1.0, c1), 1);
      const cplx lhs = moment(sol, Which::phi1(), 2 * h);
      const cplx rhs = -c1 / 2.0 * moment(sol, Which::phi1(), h - 1);
      EXPECT_LT(std::abs(lhs - rhs), 1e-5 * std::abs(lhs)) << "h=" << h;
    }
}

TEST(Invariants, GramEigenvaluesNonnegative) {
  for (const cplx& c1 : {cplx(0.0), cplx(-3.0), cplx(1.0, 2.0), cplx(-1.0, -0.5)}) {
    const SpectralSolution sol = eigenpairs(spec(2, 1.0, c1), 1);
    EXPECT_GE(sol.mu1, -1e-10);
    EXPECT_GE(sol.mu2, -1e-10);
  }
}
