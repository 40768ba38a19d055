#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "brecs/model.hpp"
#include "support/stat_checks.hpp"

using namespace brecs;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, RngHandle& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

int numerical_rank(const Matrix& m, double rel = 1e-10) {
  const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s[i] > rel * s[0];
  return r;
}

// log N(y; μ, Σ) summed over rows, written directly from the density.
double direct_loglik(const Matrix& Y, const Matrix& X, const Matrix& C, const Matrix& S) {
  const Matrix Si = S.inverse();
  const double ld = std::log(S.determinant());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const Vector r = (Y.row(i) - X.row(i) * C).transpose();
    acc += -0.5 * static_cast<double>(Y.cols()) * std::log(2.0 * std::numbers::pi) - 0.5 * ld - 0.5 * r.dot(Si * r);
  }
  return acc;
}

// Independent log Ga(τ; αp, ½) + log Dir(φ; α) using the test-side Lanczos lgamma.
double oracle_alpha_density(double alpha, double tau, const Vector& phi) {
  using brecs_test::lanczos_lgamma;
  const double p = static_cast<double>(phi.size());
  double v = alpha * p * std::log(0.5) - lanczos_lgamma(alpha * p) + (alpha * p - 1.0) * std::log(tau) - 0.5 * tau;
  v += lanczos_lgamma(alpha * p) - p * lanczos_lgamma(alpha);
  for (Eigen::Index l = 0; l < phi.size(); ++l) v += (alpha - 1.0) * std::log(phi[l]);
  return v;
}

}  // namespace

TEST(RegressionData, CachesGramBlocksAndNorms) {
  RngHandle rng(1);
  const Matrix X = random_matrix(20, 4, rng), Y = random_matrix(20, 3, rng);
  const RegressionData d(Y, X);
  EXPECT_EQ(d.n(), 20);
  EXPECT_EQ(d.q(), 3);
  EXPECT_EQ(d.p(), 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i) s += X(i, j) * X(i, j);
    EXPECT_DOUBLE_EQ(d.column_norms_sq()[j], s);
  }
  EXPECT_LT((d.XtY() - X.transpose() * Y).norm(), 1e-12);
  EXPECT_LT((d.YtY() - Y.transpose() * Y).norm(), 1e-12);
}

TEST(RegressionData, RejectsInvalidShapes) {
  RngHandle rng(2);
  EXPECT_THROW(RegressionData(random_matrix(10, 5, rng), random_matrix(10, 4, rng)), DataError);  // q > p
  EXPECT_THROW(RegressionData(random_matrix(10, 2, rng), random_matrix(9, 4, rng)), DataError);
  EXPECT_THROW(RegressionData(random_matrix(1, 2, rng), random_matrix(1, 4, rng)), DataError);
  Matrix y = random_matrix(10, 2, rng);
  y(3, 1) = std::nan("");
  EXPECT_THROW(RegressionData(y, random_matrix(10, 4, rng)), DataError);
}

TEST(HyperParams, DefaultsAndValidation) {
  const HyperParams hp = default_hyperparams(5, 10);
  EXPECT_EQ(hp.gamma, Vector::Ones(5));
  EXPECT_DOUBLE_EQ(hp.nu, 7.0);
  EXPECT_EQ(hp.upsilon.value(), Matrix::Identity(5, 5));
  EXPECT_DOUBLE_EQ(hp.alpha_lower, 0.1);
  EXPECT_DOUBLE_EQ(hp.alpha_upper, 0.5);
  EXPECT_EQ(hp.alpha_grid_size, 100);
  EXPECT_NO_THROW(hp.validate(5));

  HyperParams bad = hp;
  bad.nu = 3.5;
  EXPECT_THROW(bad.validate(5), DomainError);
  bad = hp;
  bad.alpha_lower = 0.6;
  EXPECT_THROW(bad.validate(5), DomainError);
  bad = hp;
  bad.gamma[2] = 0.0;
  EXPECT_THROW(bad.validate(5), DomainError);
  bad = hp;
  bad.alpha_grid_size = 1;
  EXPECT_THROW(bad.validate(5), DomainError);
}

TEST(ComposeC, IdentityFactorReturnsB) {
  RngHandle rng(3);
  const Matrix B = random_matrix(6, 4, rng);
  EXPECT_EQ(compose_C(Matrix::Identity(4, 4), B), B);
}

TEST(ComposeC, RankOneOuterProduct) {
  RngHandle rng(4);
  const Matrix a = random_matrix(3, 1, rng), b = random_matrix(5, 1, rng);
  const Matrix C = compose_C(a, b);
  EXPECT_LT((C - b * a.transpose()).norm(), 1e-15);
  EXPECT_EQ(numerical_rank(C), 1);
}

TEST(ComposeC, RandomRankTwo) {
  RngHandle rng(5);
  const Matrix C = compose_C(random_matrix(3, 2, rng), random_matrix(5, 2, rng));
  EXPECT_EQ(C.rows(), 5);
  EXPECT_EQ(C.cols(), 3);
  const Vector s = Eigen::JacobiSVD<Matrix>(C).singularValues();
  EXPECT_LT(s[2], 1e-10);
  EXPECT_GT(s[1], 1e-3);
}

TEST(ComposeC, DimensionMismatchThrows) {
  EXPECT_THROW(compose_C(Matrix::Ones(3, 2), Matrix::Ones(5, 3)), DomainError);
}

TEST(ComposeC, ColumnSharingTelescopes) {
  RngHandle rng(6);
  const Matrix A = random_matrix(4, 4, rng), B = random_matrix(7, 4, rng);
  for (int u = 1; u < 4; ++u) {
    const Matrix diff = compose_C(A.leftCols(u + 1), B.leftCols(u + 1)) - compose_C(A.leftCols(u), B.leftCols(u));
    EXPECT_LT((diff - B.col(u) * A.col(u).transpose()).norm(), 1e-12);
  }
}

TEST(Loglik, ZeroResidualUnitCovariance) {
  RngHandle rng(7);
  const Matrix X = random_matrix(8, 3, rng), A = random_matrix(2, 2, rng), B = random_matrix(3, 2, rng);
  const Matrix Y = X * B * A.transpose();
  const RegressionData d(Y, X);
  EXPECT_NEAR(loglik_rank(d, A, B, SpdMatrix::identity(2)), -0.5 * 8 * 2 * std::log(2.0 * std::numbers::pi), 1e-9);
}

TEST(Loglik, ScalarCase) {
  // n = 1 is below the data minimum, so duplicate the single observation and halve
  Matrix Y(2, 1), X(2, 1);
  Y << 2.0, 2.0;
  X << 1.0, 1.0;
  const RegressionData d(Y, X);
  const double ll = loglik_C(d, Matrix::Ones(1, 1), SpdMatrix::identity(1));
  EXPECT_NEAR(0.5 * ll, -0.5 * std::log(2.0 * std::numbers::pi) - 0.5, 1e-12);
}

TEST(Loglik, DoublingSigmaShiftsByLogTwo) {
  RngHandle rng(8);
  const Matrix X = random_matrix(10, 3, rng), A = random_matrix(2, 1, rng), B = random_matrix(3, 1, rng);
  const RegressionData d(X * B * A.transpose(), X);
  const double l1 = loglik_rank(d, A, B, SpdMatrix::identity(2));
  const double l2 = loglik_rank(d, A, B, SpdMatrix(2.0 * Matrix::Identity(2, 2)));
  EXPECT_NEAR(l2 - l1, -0.5 * 10 * 2 * std::log(2.0), 1e-9);
}

TEST(Loglik, MatchesRowwiseDensity) {
  RngHandle rng(9);
  const Matrix X = random_matrix(15, 4, rng), Y = random_matrix(15, 3, rng);
  const Matrix A = random_matrix(3, 2, rng), B = random_matrix(4, 2, rng);
  Matrix S(3, 3);
  S << 1.5, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 0.8;
  const RegressionData d(Y, X);
  EXPECT_NEAR(loglik_rank(d, A, B, SpdMatrix(S)), direct_loglik(Y, X, B * A.transpose(), S), 1e-9);
}

TEST(Loglik, InvariantUnderFactorTransform) {
  RngHandle rng(10);
  const Matrix X = random_matrix(12, 4, rng), Y = random_matrix(12, 3, rng);
  const Matrix A = random_matrix(3, 2, rng), B = random_matrix(4, 2, rng);
  Matrix R(2, 2);
  R << 2.0, 0.5, -1.0, 1.5;
  const RegressionData d(Y, X);
  const SpdMatrix S = SpdMatrix::identity(3);
  EXPECT_NEAR(loglik_rank(d, A * R.transpose(), B * R.inverse(), S), loglik_rank(d, A, B, S), 1e-9);
}

TEST(Loglik, DecreasesWithResidualNorm) {
  RngHandle rng(11);
  const Matrix X = random_matrix(12, 3, rng), A = random_matrix(2, 1, rng), B = random_matrix(3, 1, rng);
  const Matrix C = B * A.transpose();
  const RegressionData d(X * C, X);
  const SpdMatrix S = SpdMatrix::identity(2);
  double prev = loglik_C(d, C, S);
  for (double eps : {0.1, 0.5, 1.0, 3.0}) {
    const double cur = loglik_C(d, C * (1.0 + eps), S);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(AlphaLogConditional, DifferencesMatchIndependentOracle) {
  RngHandle rng(12);
  const Vector phi = sample_dirichlet(Vector::Constant(6, 0.4), rng);
  const double tau = 0.7;
  const AlphaRange range{1.0 / 6.0, 0.5};
  for (double a1 : {0.2, 0.3, 0.45})
    for (double a2 : {0.17, 0.25, 0.5}) {
      const double lib = alpha_log_conditional(a1, tau, phi, range) - alpha_log_conditional(a2, tau, phi, range);
      EXPECT_NEAR(lib, oracle_alpha_density(a1, tau, phi) - oracle_alpha_density(a2, tau, phi), 1e-8);
    }
}

TEST(AlphaLogConditional, SingleCoordinateIsGammaDensity) {
  const Vector phi = Vector::Ones(1);
  const AlphaRange range{0.1, 2.0};
  for (double alpha : {0.3, 1.0, 1.7})
    for (double tau : {0.1, 2.0, 9.0}) {
      const double gamma_logpdf = alpha * std::log(0.5) - brecs_test::lanczos_lgamma(alpha) +
                                  (alpha - 1.0) * std::log(tau) - 0.5 * tau;
      EXPECT_NEAR(alpha_log_conditional(alpha, tau, phi, range), gamma_logpdf, 1e-10);
    }
}

TEST(AlphaLogConditional, DivergesAsTauVanishes) {
  const Vector phi = Vector::Constant(4, 0.25);
  const AlphaRange range{0.25, 1.0};
  // αp = 2 > 1, so the (αp − 1) ln τ term drives the value down without bound
  double prev = alpha_log_conditional(0.5, 1e-2, phi, range);
  for (double tau : {1e-4, 1e-8, 1e-16, 1e-64}) {
    const double cur = alpha_log_conditional(0.5, tau, phi, range);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(prev, -100.0);
}

TEST(AlphaLogConditional, RejectsOutOfRange) {
  const Vector phi = Vector::Constant(2, 0.5);
  EXPECT_THROW(alpha_log_conditional(0.6, 1.0, phi, {0.1, 0.5}), DomainError);
  EXPECT_THROW(alpha_log_conditional(0.05, 1.0, phi, {0.1, 0.5}), DomainError);
}

TEST(AlphaLogConditional, ZeroPhiIsFloored) {
  Vector phi(3);
  phi << 0.0, 0.5, 0.5;
  EXPECT_TRUE(std::isfinite(alpha_log_conditional(0.3, 1.0, phi, {0.1, 0.5})));
}

TEST(Parametrization, ParseAndPrint) {
  EXPECT_EQ(parse_parametrization("rrn"), Parametrization::RRn);
  EXPECT_EQ(parse_parametrization("RRcs"), Parametrization::RRcs);
  EXPECT_STREQ(to_string(Parametrization::RRn), "rrn");
  EXPECT_THROW(parse_parametrization("xyz"), DomainError);
}

TEST(DlColumnState, PriorVariances) {
  DlColumnState dl;
  dl.tau = 2.0;
  dl.phi = (Vector(2) << 0.25, 0.75).finished();
  dl.psi = (Vector(2) << 1.0, 3.0).finished();
  const Vector v = dl.prior_variances();
  EXPECT_DOUBLE_EQ(v[0], 1.0 * 4.0 * 0.0625);
  EXPECT_DOUBLE_EQ(v[1], 3.0 * 4.0 * 0.5625);
}
