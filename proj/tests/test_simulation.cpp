#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "brecs/simulation.hpp"

using namespace brecs;

namespace {

int numerical_rank(const Matrix& C) {
  Eigen::JacobiSVD<Matrix> svd(C);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  return static_cast<int>((s.array() > 1e-8 * s[0]).count());
}

int zero_rows(const Matrix& C) {
  int z = 0;
  for (Eigen::Index j = 0; j < C.rows(); ++j) z += C.row(j).cwiseAbs().maxCoeff() == 0.0;
  return z;
}

long long zero_entries(const Matrix& C) { return (C.array() == 0.0).count(); }

// Pearson correlation of two 0/1 vectors, computed from raw moments.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

}  // namespace

TEST(GenerateTruth, WorkedCounts) {
  RngHandle rng(1);
  DgpSpec s;
  const TruthBundle t = generate_truth(s, rng);
  EXPECT_EQ(numerical_rank(t.C0), 3);
  EXPECT_LT((t.C0 - t.B0 * t.A0.transpose()).norm(), 1e-12);

  s.kind = DgpKind::SparseRows;
  s.p_star = 5;
  EXPECT_EQ(zero_rows(generate_truth(s, rng).C0), 5);

  s.kind = DgpKind::RandomZeros;
  s.z = 0.5;
  EXPECT_EQ(zero_entries(generate_truth(s, rng).C0), 25);
}

TEST(GenerateTruth, ShapesCenteringAndCovariances) {
  RngHandle rng(2);
  DgpSpec s;
  s.n = 40;
  const TruthBundle t = generate_truth(s, rng);
  EXPECT_EQ(t.X.rows(), 40);
  EXPECT_EQ(t.X.cols(), 10);
  EXPECT_EQ(t.Y.cols(), 5);
  EXPECT_LT(t.Y.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  for (int k = 0; k < 5; ++k) {
    EXPECT_GE(t.Sigma0(k, k), 0.5);
    EXPECT_LE(t.Sigma0(k, k), 1.75);
  }
  EXPECT_EQ((t.Sigma0 - Matrix(t.Sigma0.diagonal().asDiagonal())).norm(), 0.0);
  s.e_corr = true;
  EXPECT_EQ(generate_truth(s, rng).Sigma0, compound_symmetry(5, 0.5));
}

TEST(GenerateTruth, CorrelatedDesignHasCompoundSymmetry) {
  RngHandle rng(3);
  DgpSpec s;
  s.n = 20000;
  s.p = 4;
  s.q = 2;
  s.r0 = 1;
  s.x_corr = true;
  const TruthBundle t = generate_truth(s, rng);
  const Matrix cov = t.X.transpose() * t.X / static_cast<double>(s.n);
  EXPECT_LT((cov - compound_symmetry(4, 0.5)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(GenerateTruth, FuzzCountInvariants) {
  RngHandle meta(4);
  for (int t = 0; t < 1000; ++t) {
    DgpSpec s;
    s.n = 2 + static_cast<int>(meta.uniform() * 10);
    s.q = 1 + static_cast<int>(meta.uniform() * 6);
    s.p = s.q + static_cast<int>(meta.uniform() * 8);
    s.r0 = 1 + static_cast<int>(meta.uniform() * std::min(s.p, s.q));
    s.kind = static_cast<DgpKind>(static_cast<int>(meta.uniform() * 3));
    s.p_star = 1 + static_cast<int>(meta.uniform() * s.p);
    s.z = meta.uniform();
    s.x_corr = meta.uniform() < 0.5;
    s.e_corr = meta.uniform() < 0.5;
    RngHandle rng(derive_seed(99, t));
    const TruthBundle tb = generate_truth(s, rng);
    ASSERT_EQ(tb.C0.rows(), s.p);
    ASSERT_EQ(tb.C0.cols(), s.q);
    ASSERT_TRUE(tb.Y.allFinite());
    switch (s.kind) {
      case DgpKind::NonSparse:
        ASSERT_EQ(numerical_rank(tb.C0), s.r0) << s.label();
        break;
      case DgpKind::SparseRows:
        ASSERT_EQ(zero_rows(tb.C0), s.p - s.p_star) << s.label();
        break;
      case DgpKind::RandomZeros:
        ASSERT_EQ(zero_entries(tb.C0), static_cast<long long>(std::floor(s.z * s.p * s.q + 1e-9))) << s.label();
        break;
    }
  }
}

TEST(GenerateTruth, RejectsInvalidSpecs) {
  RngHandle rng(5);
  DgpSpec s;
  s.r0 = 6;
  EXPECT_THROW(generate_truth(s, rng), DomainError);
  s = DgpSpec{};
  s.kind = DgpKind::SparseRows;
  s.p_star = 0;
  EXPECT_THROW(generate_truth(s, rng), DomainError);
  s = DgpSpec{};
  s.kind = DgpKind::RandomZeros;
  s.z = 1.5;
  EXPECT_THROW(generate_truth(s, rng), DomainError);
}

TEST(GenerateTruth, DeterministicForSeed) {
  DgpSpec s;
  RngHandle a(7), b(7);
  EXPECT_EQ(generate_truth(s, a).Y, generate_truth(s, b).Y);
}

// ---------------------------------------------------------------------------

TEST(Mse, WorkedValues) {
  const Matrix C0 = Matrix::Random(3, 4);
  EXPECT_EQ(mse(C0, C0), 0.0);
  EXPECT_DOUBLE_EQ(mse(C0 + Matrix::Ones(3, 4), C0), 1.0);
  const Matrix d = (Matrix(2, 2) << 1.0, 0.0, 0.0, 2.0).finished();
  EXPECT_DOUBLE_EQ(mse(d, Matrix::Zero(2, 2)), 1.25);
  EXPECT_THROW(mse(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), DomainError);
}

TEST(Mse, TransposeInvariant) {
  RngHandle rng(8);
  for (int t = 0; t < 100; ++t) {
    Matrix a(3, 5), b(3, 5);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a.data()[i] = rng.normal();
      b.data()[i] = rng.normal();
    }
    ASSERT_NEAR(mse(a, b), mse(a.transpose(), b.transpose()), 1e-14);
  }
}

TEST(Classification, WorkedValues) {
  const Matrix truth = (Matrix(1, 2) << 1.0, 0.0).finished();
  const Classification c = classification_metrics(truth, truth);
  EXPECT_EQ(c.mcc, 1.0);
  EXPECT_EQ(c.confusion.tp, 1);
  EXPECT_EQ(c.confusion.tn, 1);
  EXPECT_EQ(*c.tpr, 1.0);
  EXPECT_EQ(*c.fnr, 0.0);
}

TEST(Classification, DegenerateRules) {
  const Matrix ones = Matrix::Ones(2, 2), zeros = Matrix::Zero(2, 2);
  EXPECT_EQ(classification_metrics(ones, ones).mcc, 1.0);    // all truly nonzero, all found
  EXPECT_EQ(classification_metrics(zeros, zeros).mcc, 1.0);  // all truly zero, all found
  EXPECT_EQ(classification_metrics(zeros, ones).mcc, -1.0);  // one-class truth, all wrong
  EXPECT_EQ(classification_metrics(ones, zeros).mcc, -1.0);
  EXPECT_FALSE(classification_metrics(ones, zeros).tpr.has_value());
  // one-class truth, partly right: zero denominator, reported as 0
  const Matrix mixed = (Matrix(2, 2) << 1.0, 0.0, 1.0, 1.0).finished();
  EXPECT_EQ(classification_metrics(mixed, ones).mcc, 0.0);
  // mixed truth, constant prediction: zero denominator, reported as 0
  EXPECT_EQ(classification_metrics(ones, mixed).mcc, 0.0);
  EXPECT_EQ(classification_metrics(zeros, mixed).mcc, 0.0);
}

TEST(Classification, MatchesPhiCoefficient) {
  RngHandle rng(9);
  int checked = 0;
  while (checked < 1000) {
    const int p = 2 + static_cast<int>(rng.uniform() * 8), q = 1 + static_cast<int>(rng.uniform() * 6);
    const double dens_t = rng.uniform(), dens_p = rng.uniform();
    Matrix C0(p, q), Ch(p, q);
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < C0.size(); ++i) {
      const bool t = rng.uniform() < dens_t, pr = rng.uniform() < dens_p;
      C0.data()[i] = t ? rng.normal() : 0.0;
      Ch.data()[i] = pr ? rng.normal() : 0.0;
      a.push_back(C0.data()[i] != 0.0);
      b.push_back(Ch.data()[i] != 0.0);
    }
    const Classification c = classification_metrics(Ch, C0);
    const auto& k = c.confusion;
    const bool degenerate = (k.tp + k.fp) == 0 || (k.tp + k.fn) == 0 || (k.tn + k.fp) == 0 || (k.tn + k.fn) == 0;
    ASSERT_GE(c.mcc, -1.0);
    ASSERT_LE(c.mcc, 1.0);
    if (c.tpr) ASSERT_NEAR(*c.tpr + *c.fnr, 1.0, 1e-15);
    if (degenerate) {
      ASSERT_TRUE(c.mcc == -1.0 || c.mcc == 0.0 || c.mcc == 1.0);
      continue;
    }
    ASSERT_NEAR(c.mcc, pearson(b, a), 1e-12);
    ++checked;
  }
}

TEST(Chi2Uniformity, WorkedValues) {
  const Chi2Result flat = chi2_uniformity({10, 10, 10});
  EXPECT_EQ(flat.statistic, 0.0);
  EXPECT_EQ(flat.p_value, 1.0);
  const Chi2Result r = chi2_uniformity({30, 20, 10});
  EXPECT_DOUBLE_EQ(r.statistic, 10.0);
  EXPECT_EQ(r.df, 2);
  EXPECT_NEAR(r.p_value, std::exp(-5.0), 1e-14);
  EXPECT_THROW(chi2_uniformity({0, 0, 0}), DomainError);
}

TEST(Chi2Uniformity, PermutationInvariant) {
  std::vector<long long> c = {7, 1, 12, 4, 9};
  const double stat = chi2_uniformity(c).statistic;
  std::sort(c.begin(), c.end());
  do {
    ASSERT_DOUBLE_EQ(chi2_uniformity(c).statistic, stat);
  } while (std::next_permutation(c.begin(), c.end()));
}

TEST(RankSummaries, MapTiesGoToSmallerRank) {
  EXPECT_EQ(map_rank({1, 2, 2, 3, 3}, 3), 2);
  EXPECT_EQ(map_rank({3, 3, 1}, 3), 3);
  const Vector post = rank_posterior({1, 2, 2, 3}, 4);
  EXPECT_DOUBLE_EQ(post[1], 0.5);
  EXPECT_DOUBLE_EQ(post[3], 0.0);
  EXPECT_THROW(rank_counts({0}, 3), DomainError);
}

TEST(RunExperiment, DeterministicAndJobIndependent) {
  DgpSpec s;
  s.n = 40;
  s.q = 3;
  s.p = 5;
  s.r0 = 2;
  SamplerConfig cfg;
  cfg.n_iter = 300;
  cfg.burn_in = 100;
  const ExperimentSummary a = run_experiment(s, cfg, 2, 17, 1);
  const ExperimentSummary b = run_experiment(s, cfg, 2, 17, 2);
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.rows[i].C_hat, b.rows[i].C_hat);
    EXPECT_EQ(a.rows[i].metrics.mse, b.rows[i].metrics.mse);
    EXPECT_EQ(a.rows[i].data_seed, derive_seed(17, 2 * i));
    EXPECT_EQ(a.rows[i].chain_seed, derive_seed(17, 2 * i + 1));
  }
  EXPECT_EQ(a.mse.count, 2);
  EXPECT_NE(a.rows[0].C0, a.rows[1].C0);
}
