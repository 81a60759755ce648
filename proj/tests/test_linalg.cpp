#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "grushin/linalg.hpp"

using namespace grushin;

namespace {

CBand random_band(std::size_t n, int kl, int ku, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  CBand m(n, kl, ku);
  for (Index i = 0; i < static_cast<Index>(n); ++i)
    for (Index j = std::max<Index>(0, i - kl); j <= std::min<Index>(static_cast<Index>(n) - 1, i + ku); ++j)
      m.ref(i, j) = cplx(g(rng), g(rng));
  return m;
}

Eigen::MatrixXcd dense(const CBand& m) {
  const auto n = static_cast<Index>(m.size());
  Eigen::MatrixXcd d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) d(i, j) = m(i, j);
  return d;
}

CVector random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  CVector v(n);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}

}  // namespace

TEST(BandMatrix, ProductMatchesDense) {
  const CBand a = random_band(30, 2, 1, 1), b = random_band(30, 1, 3, 2);
  const Eigen::MatrixXcd want = dense(a) * dense(b);
  EXPECT_LT((dense(a * b) - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BandMatrix, AdjointIsConjugateTranspose) {
  const CBand a = random_band(20, 2, 1, 3);
  EXPECT_LT((dense(a.adjoint()) - dense(a).adjoint()).cwiseAbs().maxCoeff(), 0.0 + 1e-15);
  EXPECT_EQ(a.adjoint().adjoint().max_abs_diff(a), 0.0);
}

TEST(BandLU, SolvesAgainstDense) {
  const CBand a = random_band(60, 2, 3, 4);
  const CVector b = random_vector(60, 5);
  const CVector x = BandLU<cplx>(a).solve(b);
  const CVector r = a.apply(x);
  for (std::size_t k = 0; k < b.size(); ++k) EXPECT_LT(std::abs(r[k] - b[k]), 1e-10);
}

TEST(BorderedLU, MatchesDenseArrowSystem) {
  const std::size_t n = 40;
  const CBand a = random_band(n, 1, 1, 6);
  const CVector col = random_vector(n, 7), row = random_vector(n, 8), f = random_vector(n, 9);
  const cplx g(0.3, -1.2);
  const auto [u, theta] = BorderedLU(a, col, row, 0.0).solve(f, g);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = dense(a);
  Eigen::VectorXcd rhs(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    m(static_cast<Index>(k), static_cast<Index>(n)) = col[k];
    m(static_cast<Index>(n), static_cast<Index>(k)) = row[k];
    rhs(static_cast<Index>(k)) = f[k];
  }
  rhs(static_cast<Index>(n)) = g;
  const Eigen::VectorXcd want = m.fullPivLu().solve(rhs);
  for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(u[k] - want(static_cast<Index>(k))), 1e-9);
  EXPECT_LT(std::abs(theta - want(static_cast<Index>(n))), 1e-9);
}

TEST(BorderedLU, SingularBlockWithGoodBorderIsSolvable) {
  // tridiag(-1, 2, -1) shifted by its lowest eigenvalue; kernel sin(k pi / (n + 1)).
  const std::size_t n = 25;
  const double lam = 2.0 - 2.0 * std::cos(M_PI / (n + 1));
  CBand a(n, 1, 1);
  CVector v(n);
  double vv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Index>(k);
    a.ref(i, i) = 2.0 - lam;
    if (k + 1 < n) {
      a.ref(i, i + 1) = -1.0;
      a.ref(i + 1, i) = -1.0;
    }
    v[k] = std::sin((k + 1) * M_PI / (n + 1));
    vv += std::norm(v[k]);
  }
  const auto [u, theta] = BorderedLU(a, v, v, 0.0).solve(CVector(n, 0.0), 1.0);
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(u[k] - v[k] / vv), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(theta), 0.0, 1e-10);
}

TEST(BorderedLU, DoubleKernelIsDegenerate) {
  const std::size_t n = 10;
  CBand a(n, 1, 1);
  for (std::size_t k = 2; k < n; ++k) a.ref(static_cast<Index>(k), static_cast<Index>(k)) = 1.0;
  CVector e0(n, 0.0);
  e0[0] = 1.0;
  EXPECT_THROW(BorderedLU(a, e0, e0, 0.0), DegeneracyError);
}

TEST(SymTridiagonal, EigenvaluesMatchDense) {
  const std::size_t n = 50;
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RVector d(n), e(n - 1);
  for (auto& x : d) x = u(rng);
  for (auto& x : e) x = u(rng);
  const SymTridiagonal t(d, e);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t k = 0; k < n; ++k) m(static_cast<Index>(k), static_cast<Index>(k)) = d[k];
  for (std::size_t k = 0; k + 1 < n; ++k) {
    m(static_cast<Index>(k), static_cast<Index>(k + 1)) = e[k];
    m(static_cast<Index>(k + 1), static_cast<Index>(k)) = e[k];
  }
  const Eigen::VectorXd want = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(t.eigenvalue(k), want(static_cast<Index>(k)), 1e-12);
  const double lam = t.eigenvalue(3);
  const RVector v = t.eigenvector(lam);
  Eigen::VectorXd ev(static_cast<Index>(n));
  for (std::size_t k = 0; k < n; ++k) ev(static_cast<Index>(k)) = v[k];
  EXPECT_LT((m * ev - lam * ev).norm(), 1e-10);
  EXPECT_NEAR(ev.norm(), 1.0, 1e-12);
}
