#pragma once

// Draw-wise SAVS sparsification and the summaries built on it.

#include <algorithm>
#include <cmath>
#include <vector>

#include "brecs/errors.hpp"
#include "brecs/linalg.hpp"
#include "brecs/model.hpp"

namespace brecs {

/// Sparsified draws C̄⁽ᵐ⁾ and their per-row nonzero counts N_•j⁽ᵐ⁾ (p×M).
struct SparseDrawArchive {
  std::vector<Matrix> draws;
  Eigen::MatrixXi row_nonzero;

  std::size_t size() const noexcept { return draws.size(); }
  Eigen::Index p() const { return draws.empty() ? 0 : draws.front().rows(); }
  Eigen::Index q() const { return draws.empty() ? 0 : draws.front().cols(); }
};

struct RiSummary {
  double mode, mean, std, q25, q50, q75;
};

enum class Verdict { Keep, Exclude };

struct RuleOfThumb {
  Verdict verdict;
  double survival;  // P(RI > s̄r)
};

struct SelectionReport {
  Matrix pip;
  Matrix zeta;
  Matrix C_hat;
  Matrix ri;  // p×(q+1), column k is mass at k/q
  std::vector<RiSummary> ri_summary;
  std::vector<RuleOfThumb> verdicts;
  double sr_bar = 0.70;
  double p_bar = 0.60;
  std::size_t draws = 0;
};

/// Entrywise sign(c) (|c| ‖X_j‖² − |c|⁻²)₊ / ‖X_j‖², evaluated as
/// sign(c) (|c|³‖X_j‖² − 1)₊ / (c² ‖X_j‖²) so that the result is nonzero
/// exactly when |c|³‖X_j‖² > 1.
inline Matrix savs_sparsify_draw(const Matrix& C, const Vector& column_norms_sq) {
  if (column_norms_sq.size() != C.rows()) throw DomainError("SAVS: norm vector length != p");
  Matrix out(C.rows(), C.cols());
  for (Eigen::Index j = 0; j < C.rows(); ++j) {
    const double nj = column_norms_sq[j];
    if (!(nj > 0.0)) throw DomainError("SAVS: covariate " + std::to_string(j) + " has zero norm");
    for (Eigen::Index k = 0; k < C.cols(); ++k) {
      const double c = C(j, k);
      const double a = std::abs(c);
      const double excess = a * a * a * nj - 1.0;
      out(j, k) = (c == 0.0 || !(excess > 0.0)) ? 0.0 : std::copysign(excess / (c * c * nj), c);
    }
  }
  return out;
}

inline SparseDrawArchive sparsify_draws(const std::vector<Matrix>& C_draws, const Vector& column_norms_sq) {
  SparseDrawArchive ar;
  if (C_draws.empty()) return ar;
  const Eigen::Index p = C_draws.front().rows();
  ar.draws.reserve(C_draws.size());
  ar.row_nonzero.resize(p, static_cast<Eigen::Index>(C_draws.size()));
  for (std::size_t m = 0; m < C_draws.size(); ++m) {
    ar.draws.push_back(savs_sparsify_draw(C_draws[m], column_norms_sq));
    ar.row_nonzero.col(static_cast<Eigen::Index>(m)) =
        (ar.draws.back().array() != 0.0).cast<int>().rowwise().sum();
  }
  return ar;
}

inline Matrix compute_pip(const SparseDrawArchive& ar) {
  if (ar.size() == 0) throw DomainError("PIP: empty draw archive");
  Matrix count = Matrix::Zero(ar.p(), ar.q());
  for (const auto& d : ar.draws) count.array() += (d.array() != 0.0).cast<double>();
  return count / static_cast<double>(ar.size());
}

/// Ĉ_jk = 0 when PIP_jk ≤ 0.5, else the mean of C̄_jk over all draws (zeros included).
inline Matrix sparse_point_estimate(const SparseDrawArchive& ar, const Matrix& pip) {
  if (ar.size() == 0) throw DomainError("point estimate: empty draw archive");
  if (pip.rows() != ar.p() || pip.cols() != ar.q()) throw DomainError("point estimate: shape mismatch");
  Matrix mean = Matrix::Zero(ar.p(), ar.q());
  for (const auto& d : ar.draws) mean += d;
  mean /= static_cast<double>(ar.size());
  return (pip.array() > 0.5).select(mean, 0.0);
}

inline Matrix pip_uncertainty(const Matrix& pip) {
  if ((pip.array() < 0.0).any() || (pip.array() > 1.0).any())
    throw DomainError("PIP entries must lie in [0, 1]");
  return (1.0 - 2.0 * (pip.array() - 0.5).abs()).matrix();
}

/// Row j: mass of the share of nonzero responses over {0, 1/q, …, 1}.
inline Matrix relevance_index(const SparseDrawArchive& ar) {
  if (ar.size() == 0) throw DomainError("relevance index: empty draw archive");
  const Eigen::Index p = ar.p(), q = ar.q();
  Matrix ri = Matrix::Zero(p, q + 1);
  for (Eigen::Index m = 0; m < ar.row_nonzero.cols(); ++m)
    for (Eigen::Index j = 0; j < p; ++j) ri(j, ar.row_nonzero(j, m)) += 1.0;
  return ri / static_cast<double>(ar.size());
}

/// Support point k/q of column k of an RI row.
inline double ri_support(Eigen::Index k, Eigen::Index q) {
  return static_cast<double>(k) / static_cast<double>(q);
}

/// P(RI > s̄r) with strict inequality; keep iff it reaches p̄.
inline RuleOfThumb rule_of_thumb(const Eigen::Ref<const Vector>& ri_row, double sr_bar, double p_bar) {
  const Eigen::Index q = ri_row.size() - 1;
  double s = 0.0;
  for (Eigen::Index k = 0; k <= q; ++k)
    if (ri_support(k, q) > sr_bar) s += ri_row[k];
  return {s >= p_bar ? Verdict::Keep : Verdict::Exclude, s};
}

/// Survival curve S(x) = P(RI > x) evaluated at each support point.
inline Vector ri_survival(const Eigen::Ref<const Vector>& ri_row) {
  const Eigen::Index n = ri_row.size();
  Vector s(n);
  double tail = 0.0;
  for (Eigen::Index k = n; k-- > 0;) {
    s[k] = tail;
    tail += ri_row[k];
  }
  return s;
}

inline RiSummary ri_summary(const Eigen::Ref<const Vector>& ri_row) {
  const Eigen::Index q = ri_row.size() - 1;
  RiSummary out{};
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k <= q; ++k)
    if (ri_row[k] > ri_row[best]) best = k;  // ties keep the smaller support point
  out.mode = ri_support(best, q);

  double mean = 0.0, second = 0.0;
  for (Eigen::Index k = 0; k <= q; ++k) {
    mean += ri_row[k] * ri_support(k, q);
    second += ri_row[k] * ri_support(k, q) * ri_support(k, q);
  }
  out.mean = mean;
  out.std = std::sqrt(std::max(0.0, second - mean * mean));

  auto quantile = [&](double level) {
    double cdf = 0.0;
    for (Eigen::Index k = 0; k <= q; ++k) {
      cdf += ri_row[k];
      if (cdf >= level - 1e-12) return ri_support(k, q);
    }
    return 1.0;
  };
  out.q25 = quantile(0.25);
  out.q50 = quantile(0.50);
  out.q75 = quantile(0.75);
  return out;
}

/// Full selection pipeline on raw coefficient draws.
inline SelectionReport build_selection_report(const std::vector<Matrix>& C_draws,
                                              const Vector& column_norms_sq, double sr_bar = 0.70,
                                              double p_bar = 0.60) {
  detail::require(sr_bar >= 0.0 && sr_bar <= 1.0, "sr_bar must lie in [0, 1]");
  detail::require(p_bar > 0.0 && p_bar < 1.0, "p_bar must lie in (0, 1)");
  const SparseDrawArchive ar = sparsify_draws(C_draws, column_norms_sq);
  SelectionReport r;
  r.pip = compute_pip(ar);
  r.zeta = pip_uncertainty(r.pip);
  r.C_hat = sparse_point_estimate(ar, r.pip);
  r.ri = relevance_index(ar);
  r.sr_bar = sr_bar;
  r.p_bar = p_bar;
  r.draws = ar.size();
  for (Eigen::Index j = 0; j < r.ri.rows(); ++j) {
    const Vector row = r.ri.row(j).transpose();
    r.ri_summary.push_back(ri_summary(row));
    r.verdicts.push_back(rule_of_thumb(row, sr_bar, p_bar));
  }
  return r;
}

}  // namespace brecs
