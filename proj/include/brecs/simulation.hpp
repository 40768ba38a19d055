#pragma once

// Synthetic data-generating processes, accuracy metrics and the replication runner.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "brecs/gibbs.hpp"
#include "brecs/selection.hpp"

namespace brecs {

enum class DgpKind { NonSparse, SparseRows, RandomZeros };

inline const char* to_string(DgpKind k) {
  switch (k) {
    case DgpKind::NonSparse: return "nonsparse";
    case DgpKind::SparseRows: return "sparse";
    case DgpKind::RandomZeros: return "zeros";
  }
  return "?";
}

struct DgpSpec {
  int n = 100;
  int q = 5;
  int p = 10;
  int r0 = 3;
  DgpKind kind = DgpKind::NonSparse;
  int p_star = 0;   // SparseRows: number of nonzero rows of B0
  double z = 0.0;   // RandomZeros: share of zeroed entries of C0
  bool x_corr = false;
  bool e_corr = false;
  std::uint64_t seed = 1;

  void validate() const {
    detail::require(n >= 2, "DGP: n must be at least 2");
    detail::require(q >= 1 && p >= 1, "DGP: q and p must be positive");
    detail::require(r0 >= 1 && r0 <= std::min(p, q), "DGP: need 1 <= r0 <= min(p, q)");
    if (kind == DgpKind::SparseRows) detail::require(p_star >= 1 && p_star <= p, "DGP: need 1 <= p_star <= p");
    if (kind == DgpKind::RandomZeros) detail::require(z >= 0.0 && z <= 1.0, "DGP: need 0 <= z <= 1");
  }

  std::string label() const {
    std::string s = to_string(kind);
    if (kind == DgpKind::SparseRows) s += "(p*=" + std::to_string(p_star) + ")";
    if (kind == DgpKind::RandomZeros) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "(z=%.2f)", z);
      s += buf;
    }
    return s;
  }
};

struct TruthBundle {
  Matrix C0, A0, B0;
  Matrix Sigma0;
  Matrix X, Y;
};

/// Unit diagonal, constant off-diagonal ρ.
inline Matrix compound_symmetry(Eigen::Index d, double rho) {
  Matrix m = Matrix::Constant(d, d, rho);
  m.diagonal().setOnes();
  return m;
}

namespace detail {

inline Matrix gaussian_rows(Eigen::Index n, const Matrix& cov, RngHandle& rng) {
  const Matrix L = robust_cholesky(cov, "DGP covariance").matrixL();
  Matrix z(n, cov.rows());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < cov.rows(); ++j) z(i, j) = rng.normal();
  return z * L.transpose();
}

// k distinct indices from {0..n-1}, uniformly (partial Fisher-Yates).
inline std::vector<Eigen::Index> choose_indices(Eigen::Index n, Eigen::Index k, RngHandle& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(std::floor(rng.uniform() * static_cast<double>(n - i)));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace detail

inline TruthBundle generate_truth(const DgpSpec& spec, RngHandle& rng) {
  spec.validate();
  const Eigen::Index n = spec.n, q = spec.q, p = spec.p, r = spec.r0;
  TruthBundle t;

  const Matrix sigma_x = spec.x_corr ? compound_symmetry(p, 0.5) : Matrix::Identity(p, p);
  t.X = detail::gaussian_rows(n, sigma_x, rng);

  if (spec.e_corr) {
    t.Sigma0 = compound_symmetry(q, 0.5);
  } else {
    t.Sigma0 = Matrix::Zero(q, q);
    for (Eigen::Index k = 0; k < q; ++k) t.Sigma0(k, k) = 0.5 + 1.25 * rng.uniform();
  }

  t.A0.resize(q, r);
  t.B0.resize(p, r);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index h = 0; h < r; ++h) t.A0(j, h) = rng.normal();
  for (Eigen::Index l = 0; l < p; ++l)
    for (Eigen::Index h = 0; h < r; ++h) t.B0(l, h) = rng.normal();

  if (spec.kind == DgpKind::SparseRows)
    for (Eigen::Index l : detail::choose_indices(p, p - spec.p_star, rng)) t.B0.row(l).setZero();

  t.C0 = t.B0 * t.A0.transpose();

  if (spec.kind == DgpKind::RandomZeros) {
    const auto zeros = static_cast<Eigen::Index>(std::floor(spec.z * static_cast<double>(p * q) + 1e-9));
    for (Eigen::Index cell : detail::choose_indices(p * q, zeros, rng)) t.C0(cell % p, cell / p) = 0.0;
  }

  const Matrix E = detail::gaussian_rows(n, t.Sigma0, rng);
  t.Y = t.X * t.C0 + E;
  t.Y.rowwise() -= t.Y.colwise().mean();
  return t;
}

// ---------------------------------------------------------------------------
// metrics

inline double mse(const Matrix& C_hat, const Matrix& C0) {
  if (C_hat.rows() != C0.rows() || C_hat.cols() != C0.cols())
    throw DomainError("mse: shape mismatch");
  return (C_hat - C0).squaredNorm() / static_cast<double>(C0.size());
}

struct Confusion {
  long long tp = 0, tn = 0, fp = 0, fn = 0;
};

struct Classification {
  Confusion confusion;
  double mcc = 0.0;
  std::optional<double> tpr, fnr;  // absent when TP + FN = 0
};

/// Positive class = nonzero entry. MCC degenerate cases: one-class truth fully
/// correct -> 1, fully wrong -> -1, any other zero denominator -> 0.
inline Classification classification_metrics(const Matrix& C_hat, const Matrix& C0) {
  if (C_hat.rows() != C0.rows() || C_hat.cols() != C0.cols())
    throw DomainError("classification_metrics: shape mismatch");
  Classification out;
  auto& c = out.confusion;
  for (Eigen::Index i = 0; i < C0.size(); ++i) {
    const bool truth = C0.data()[i] != 0.0;
    const bool pred = C_hat.data()[i] != 0.0;
    if (truth && pred) ++c.tp;
    else if (!truth && !pred) ++c.tn;
    else if (pred) ++c.fp;
    else ++c.fn;
  }
  const auto tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const auto fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom > 0.0) {
    out.mcc = (tp * tn - fp * fn) / std::sqrt(denom);
  } else {
    const bool one_class = (c.tp + c.fn == 0) || (c.tn + c.fp == 0);
    if (one_class && c.fp + c.fn == 0) out.mcc = 1.0;
    else if (one_class && c.tp + c.tn == 0) out.mcc = -1.0;
    else out.mcc = 0.0;
  }
  if (c.tp + c.fn > 0) {
    out.tpr = tp / (tp + fn);
    out.fnr = fn / (tp + fn);
  }
  return out;
}

struct Chi2Result {
  double statistic;
  int df;
  double p_value;
};

/// Pearson goodness-of-fit against the uniform distribution on ranks 1..q.
inline Chi2Result chi2_uniformity(const std::vector<long long>& counts) {
  detail::require(counts.size() >= 2, "chi2_uniformity: need at least two categories");
  long long total = 0;
  for (long long c : counts) {
    detail::require(c >= 0, "chi2_uniformity: counts must be nonnegative");
    total += c;
  }
  detail::require(total > 0, "chi2_uniformity: all counts are zero");
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (long long c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  const int df = static_cast<int>(counts.size()) - 1;
  const double p = stat <= 0.0 ? 1.0 : boost::math::gamma_q(0.5 * df, 0.5 * stat);
  return {stat, df, p};
}

/// Counts of each rank 1..q among the draws.
inline std::vector<long long> rank_counts(const std::vector<int>& u_draws, int q) {
  std::vector<long long> c(static_cast<std::size_t>(q), 0);
  for (int u : u_draws) {
    if (u < 1 || u > q) throw DomainError("rank draw " + std::to_string(u) + " outside 1..q");
    ++c[u - 1];
  }
  return c;
}

inline Vector rank_posterior(const std::vector<int>& u_draws, int q) {
  if (u_draws.empty()) throw DomainError("rank_posterior: no draws");
  const auto c = rank_counts(u_draws, q);
  Vector v(q);
  for (int s = 0; s < q; ++s) v[s] = static_cast<double>(c[s]) / static_cast<double>(u_draws.size());
  return v;
}

/// Posterior mode of u; ties go to the smaller rank.
inline int map_rank(const std::vector<int>& u_draws, int q) {
  const auto c = rank_counts(u_draws, q);
  int best = 0;
  for (int s = 1; s < q; ++s)
    if (c[s] > c[best]) best = s;
  return best + 1;
}

struct MetricsRecord {
  double mse = 0.0;
  Classification cls;
  int rank_map = 0;
  Vector rank_posterior;
};

inline MetricsRecord evaluate_fit(const PosteriorDraws& draws, const RegressionData& data, const Matrix& C0,
                                  Matrix* C_hat_out = nullptr) {
  const int q = static_cast<int>(data.q());
  const SparseDrawArchive ar = sparsify_draws(draws.C_draws, data.column_norms_sq());
  const Matrix C_hat = sparse_point_estimate(ar, compute_pip(ar));
  MetricsRecord m;
  m.mse = mse(C_hat, C0);
  m.cls = classification_metrics(C_hat, C0);
  m.rank_map = map_rank(draws.u_draws, q);
  m.rank_posterior = rank_posterior(draws.u_draws, q);
  if (C_hat_out) *C_hat_out = C_hat;
  return m;
}

// ---------------------------------------------------------------------------
// replication runner

struct ReplicationRow {
  int replication = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t chain_seed = 0;
  MetricsRecord metrics;
  Matrix C0, C_hat;
};

struct Moments {
  double mean = 0.0, sd = 0.0;
  int count = 0;
};

inline Moments moments(const std::vector<double>& v) {
  Moments m;
  m.count = static_cast<int>(v.size());
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

struct ExperimentSummary {
  DgpSpec spec;
  SamplerConfig sampler;
  std::vector<ReplicationRow> rows;
  Moments rank, mse, mcc, tpr, fnr;  // tpr/fnr over replications where defined
};

/// Replication i uses data seed derive_seed(master, 2i) and chain seed
/// derive_seed(master, 2i+1), so results do not depend on `jobs`.
inline ExperimentSummary run_experiment(const DgpSpec& spec, const SamplerConfig& cfg, int replications,
                                        std::uint64_t master_seed, int jobs = 1,
                                        const std::optional<HyperParams>& hp_override = std::nullopt) {
  detail::require(replications >= 1, "need at least one replication");
  spec.validate();
  cfg.validate();
  ExperimentSummary out{spec, cfg, std::vector<ReplicationRow>(static_cast<std::size_t>(replications)), {}, {}, {}, {}, {}};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replications));

  auto work = [&](int i) {
    try {
      ReplicationRow& row = out.rows[i];
      row.replication = i;
      row.data_seed = derive_seed(master_seed, 2 * static_cast<std::uint64_t>(i));
      row.chain_seed = derive_seed(master_seed, 2 * static_cast<std::uint64_t>(i) + 1);
      DgpSpec s = spec;
      s.seed = row.data_seed;
      RngHandle rng(row.data_seed);
      TruthBundle t = generate_truth(s, rng);
      RegressionData data(t.Y, t.X, true, false);
      SamplerConfig c = cfg;
      c.seed = row.chain_seed;
      const HyperParams hp = hp_override ? *hp_override : default_hyperparams(data.q(), data.p());
      const PosteriorDraws draws = run_chain(data, hp, c);
      row.metrics = evaluate_fit(draws, data, t.C0, &row.C_hat);
      row.C0 = std::move(t.C0);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  jobs = std::max(1, std::min(jobs, replications));
  for (int start = 0; start < replications; start += jobs) {
    std::vector<std::thread> pool;
    for (int i = start; i < std::min(replications, start + jobs); ++i) pool.emplace_back(work, i);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> rk, ms, mc, tp, fn;
  for (const auto& r : out.rows) {
    rk.push_back(r.metrics.rank_map);
    ms.push_back(r.metrics.mse);
    mc.push_back(r.metrics.cls.mcc);
    if (r.metrics.cls.tpr) tp.push_back(*r.metrics.cls.tpr);
    if (r.metrics.cls.fnr) fn.push_back(*r.metrics.cls.fnr);
  }
  out.rank = moments(rk);
  out.mse = moments(ms);
  out.mcc = moments(mc);
  out.tpr = moments(tp);
  out.fnr = moments(fn);
  return out;
}

}  // namespace brecs
