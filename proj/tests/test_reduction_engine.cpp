#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "grushin/reduction_engine.hpp"

using namespace grushin;

namespace {

// E|t|^p under the density exp(-t^4/2) / Z.
double quartic_moment(double p) { return std::pow(2.0, p / 4.0) * std::tgamma((p + 1.0) / 4.0) / std::tgamma(0.25); }

// Ground state of D^2 + t^4 + c1 t via a dense eigensolver, then <t^k phi, phi>.
double dense_ground_moment(double c1, int k) {
  const Grid g{7.0, 801};
  const RVector t = g.points();
  const double dx = g.spacing();
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = t[static_cast<std::size_t>(i)];
    m(i, i) = 2.0 / (dx * dx) + std::pow(x, 4) + c1 * x;
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -1.0 / (dx * dx);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd v = es.eigenvectors().col(0);
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    num += std::pow(t[static_cast<std::size_t>(i)], k) * v(i) * v(i);
    den += v(i) * v(i);
  }
  return num / den;
}

CoefficientModel plain(int h, RVector a, CVector b1) {
  CoefficientModel m;
  m.h = h;
  m.a_taylor = std::move(a);
  m.b1_taylor = std::move(b1);
  return m;
}

}  // namespace

TEST(EllSymbols, KohnModelH3) {
  const EllTable t = ell_symbols(kohn_model(3, 1, 1.0, 1.0));
  EXPECT_TRUE(t.kernel);
  EXPECT_LT(std::abs(t.ell[0]), 3.0 * t.error[0] + 1e-6);
  EXPECT_TRUE(t.is_zero(1));
  // ||t (D + i t^3) phi||^2 = 4 ||t^4 phi||^2 for phi ~ exp(-t^4/4).
  const double expected = 4.0 * quartic_moment(8.0);
  EXPECT_NEAR(expected, 5.0, 1e-12);
  EXPECT_NEAR(t.ell[2].real(), expected, 1e-3);
  EXPECT_LT(std::abs(t.ell[2].imag()), 1e-8);
  EXPECT_TRUE(t.nonzero(2));
}

TEST(EllSymbols, SquaresModel) {
  const EllTable t = ell_symbols(squares_model(3, 4));
  EXPECT_TRUE(t.is_zero(1));
  EXPECT_NEAR(t.ell[2].real(), quartic_moment(8.0), 1e-3);
  EXPECT_GT(t.ell[2].real(), 0.0);
  EXPECT_EQ(t.order(2), "0");
  EXPECT_EQ(t.order(1), "1/4");
  EXPECT_EQ(t.order(0), "1/2");
}

TEST(EllSymbols, GilioliTrevesEvenH) {
  const EllTable t = ell_symbols(gilioli_treves_model(2, 1.0, {-3.0, 1.0, 0.0}, 1));
  EXPECT_LT(std::abs(t.ell[0]), 3.0 * t.error[0] + 1e-6);
  EXPECT_NEAR(t.ell[1].real(), dense_ground_moment(-3.0, 2), 1e-3);
  EXPECT_TRUE(t.nonzero(1));
  EXPECT_EQ(t.order(1), "1/3");
}

TEST(EllSymbols, HOneNeedsOptIn) {
  EXPECT_THROW(ell_symbols(plain(1, {1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0})), UnsupportedCaseError);
  EllOptions opt;
  opt.allow_h1 = true;
  EXPECT_NO_THROW(ell_symbols(plain(1, {1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}), opt));
}

TEST(EllSymbols, LeadingTermMatchesDirectPairing) {
  for (const CoefficientModel& m : {kohn_model(3, 1, 1.0, 1.0), squares_model(2, 3),
                                    plain(2, {1.0, 0.5, 0.2}, {cplx(-2.0, 0.7), 0.3, 0.1})}) {
    const EllTable t = ell_symbols(m);
    const SpectralSolution sol = eigenpairs(m.base_spec(), 1);
    const LevelSolution& lv = sol.fine();
    const cplx direct = inner(to_matrix(localized_operator(m, 0), lv.spec.grid).apply(lv.phi1), lv.phi2, lv.dx());
    EXPECT_LT(std::abs(t.ell_raw[0] - direct), 1e-8);
  }
}

TEST(EllSymbols, LeadingTermEqualsMinusBorderedTheta) {
  for (const CoefficientModel& m : {squares_model(3, 4), plain(2, {1.0, 0.0, 0.0}, {cplx(-1.0, 0.4), 0.0, 0.0})}) {
    const EllTable t = ell_symbols(m);
    const SpectralSolution sol = eigenpairs(m.base_spec(), 1);
    const cplx theta = bordered_solve(sol, CVector(sol.phi1.size(), 0.0), 1.0).second;
    EXPECT_LT(std::abs(t.ell_raw[0] + theta), 1e-8);
  }
}

TEST(EllSymbols, OddHParitySweep) {
  for (int h : {3, 5})
    for (int j0 = 0; j0 <= 2; ++j0)
      for (const cplx& c1 : critical_b1(h, j0, 1.0, 1.0)) {
        const CoefficientModel m = plain(h, {1.0, 0.7, 0.3}, {c1, 0.4, 0.2});
        const EllTable t = ell_symbols(m);
        EXPECT_TRUE(t.is_zero(1)) << "h=" << h << " j0=" << j0;
        EXPECT_EQ(t.certificates[1].reason, "parity");
        EXPECT_LT(std::abs(t.ell_raw[1]), 1e-8) << "h=" << h << " j0=" << j0;
      }
}

TEST(EllSymbols, HomogeneousScaling) {
  for (int h : {2, 3}) {
    CoefficientModel m = plain(h, {1.0, 0.0, 0.0}, {0.8, 0.0, 0.0});
    const cplx base = ell_symbols(m).ell[0];
    const double s = 3.0;
    m.xi_norm *= s;
    m.b1_taylor[0] *= s;
    const cplx scaled = ell_symbols(m).ell[0];
    EXPECT_LT(std::abs(scaled - std::pow(s, 2.0 / (h + 1)) * base), 1e-3 * std::abs(scaled)) << "h=" << h;
  }
}

TEST(EllSymbols, ErrorFloorIsHonest) {
  const EllTable t = ell_symbols(squares_model(3, 4));
  const double dx = t.grid.spacing();
  for (double e : t.error) EXPECT_GE(e, 10.0 * dx * dx);
}

TEST(Tangential, VanishingLaw) {
  for (int h : {2, 3}) {
    const TangentialReport r = tangential_vanishing_check(tangential_model(h, 1.0, -3.0));
    EXPECT_TRUE(r.vanishes) << "h=" << h;
    EXPECT_LT(std::abs(r.ell1_computed), 1e-8);
    EXPECT_LT(std::abs(r.ell2_computed), 1e-8);
  }
}

TEST(Tangential, RejectsNonTangentialModel) {
  EXPECT_THROW(tangential_vanishing_check(plain(2, {1.0, 0.0}, {-3.0, 5.0})), PreconditionError);
}

TEST(Perturbation, HarmonicIsAffineInB1) {
  const double eps = 1e-3;
  const PerturbationReport r = perturbation_eigenvalue(plain(1, {1.0}, {-1.0}), 0.0, eps);
  EXPECT_NEAR(r.prediction.real(), eps, 1e-8);
  EXPECT_NEAR(r.exact.real(), eps, 1e-6);
}

TEST(Perturbation, ZeroShift) {
  const PerturbationReport r = perturbation_eigenvalue(plain(3, {1.0}, {-3.0}), 0.0, 0.0);
  EXPECT_EQ(r.prediction, cplx(0.0));
}

TEST(Perturbation, QuarticSecondOrderRemainder) {
  const PerturbationReport r = perturbation_eigenvalue(plain(3, {1.0}, {-3.0}), 0.01, 0.0);
  EXPECT_LT(std::abs(r.prediction - r.exact), 1e-4);
  EXPECT_NEAR(r.prediction.real(), 0.01 * std::tgamma(7.0 / 4.0) * 2.0 * std::sqrt(2.0) / std::tgamma(0.25), 1e-6);
}

TEST(Perturbation, NeedsKernel) {
  EXPECT_THROW(perturbation_eigenvalue(plain(3, {1.0}, {1.0}), 0.01, 0.0), PreconditionError);
}
