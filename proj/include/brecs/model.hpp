#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "brecs/distributions.hpp"
#include "brecs/errors.hpp"
#include "brecs/linalg.hpp"

namespace brecs {

/// Observed responses Y (n×q) and covariates X (n×p) plus cached Gram blocks.
/// The samplers only touch the data through XᵀX, XᵀY and YᵀY.
class RegressionData {
 public:
  RegressionData(Matrix y, Matrix x, bool centered = false, bool intercept_added = false)
      : y_(std::move(y)), x_(std::move(x)), centered_(centered), intercept_added_(intercept_added) {
    if (y_.rows() != x_.rows())
      throw DataError("Y has " + std::to_string(y_.rows()) + " rows but X has " +
                      std::to_string(x_.rows()));
    if (y_.rows() < 2) throw DataError("need at least n = 2 observations");
    if (y_.cols() < 1 || x_.cols() < 1) throw DataError("Y and X need at least one column");
    if (y_.cols() > x_.cols())
      throw DataError("q = " + std::to_string(y_.cols()) + " responses exceeds p = " +
                      std::to_string(x_.cols()) + " covariates; the maximal rank is taken as q <= p");
    if (!y_.allFinite() || !x_.allFinite()) throw DataError("Y and X must be finite");
    refresh();
  }

  Eigen::Index n() const noexcept { return y_.rows(); }
  Eigen::Index q() const noexcept { return y_.cols(); }
  Eigen::Index p() const noexcept { return x_.cols(); }

  const Matrix& Y() const noexcept { return y_; }
  const Matrix& X() const noexcept { return x_; }
  const Vector& column_norms_sq() const noexcept { return col_norms_sq_; }
  const Matrix& XtX() const noexcept { return xtx_; }
  const Matrix& XtY() const noexcept { return xty_; }
  const Matrix& YtY() const noexcept { return yty_; }
  bool centered() const noexcept { return centered_; }
  bool intercept_added() const noexcept { return intercept_added_; }

  // Replaces the responses (same shape), keeping X and its cached products.
  void set_responses(Matrix y) {
    if (y.rows() != y_.rows() || y.cols() != y_.cols())
      throw DataError("replacement Y has the wrong shape");
    y_ = std::move(y);
    xty_ = x_.transpose() * y_;
    yty_ = y_.transpose() * y_;
  }

 private:
  void refresh() {
    col_norms_sq_ = x_.colwise().squaredNorm().transpose();
    xtx_ = x_.transpose() * x_;
    xty_ = x_.transpose() * y_;
    yty_ = y_.transpose() * y_;
  }

  Matrix y_, x_;
  bool centered_, intercept_added_;
  Vector col_norms_sq_;
  Matrix xtx_, xty_, yty_;
};

struct AlphaRange {
  double lower;
  double upper;
};

struct HyperParams {
  Vector gamma;    // Dirichlet concentration on rank weights, length q
  double nu;       // inverse-Wishart degrees of freedom
  SpdMatrix upsilon;
  double alpha_lower;
  double alpha_upper;
  int alpha_grid_size = 100;

  AlphaRange alpha_range() const { return {alpha_lower, alpha_upper}; }

  void validate(Eigen::Index q) const {
    detail::require(gamma.size() == q, "gamma must have length q");
    detail::require((gamma.array() > 0.0).all(), "gamma entries must be positive");
    detail::require(nu > static_cast<double>(q) - 1.0, "nu must exceed q - 1");
    detail::require(upsilon.dim() == q, "Upsilon must be q x q");
    detail::require(alpha_lower > 0.0 && alpha_lower < alpha_upper,
                    "need 0 < alpha_lower < alpha_upper");
    detail::require(alpha_grid_size >= 2, "alpha grid needs at least two points");
  }
};

/// γ = 1, ν = q + 2, Υ = I, α ∈ [1/p, 1/2], 100 grid points.
inline HyperParams default_hyperparams(Eigen::Index q, Eigen::Index p) {
  HyperParams hp{Vector::Ones(q), static_cast<double>(q) + 2.0, SpdMatrix::identity(q),
                 1.0 / static_cast<double>(p), 0.5, 100};
  if (hp.alpha_lower >= hp.alpha_upper) hp.alpha_lower = 0.5 * hp.alpha_upper;  // p <= 2
  return hp;
}

/// Dirichlet-Laplace scales for one column b of B: Var(b_l) = ψ_l τ² φ_l².
struct DlColumnState {
  double tau = 1.0;
  Vector phi;
  Vector psi;
  double alpha = 0.5;

  Vector prior_variances() const {
    return (psi.array() * phi.array().square() * (tau * tau)).matrix();
  }
};

enum class Parametrization { RRn, RRcs };

inline const char* to_string(Parametrization k) { return k == Parametrization::RRn ? "rrn" : "rrcs"; }

inline Parametrization parse_parametrization(const std::string& s) {
  if (s == "rrn" || s == "RRn") return Parametrization::RRn;
  if (s == "rrcs" || s == "RRcs") return Parametrization::RRcs;
  throw DomainError("unknown parametrization '" + s + "' (expected rrn or rrcs)");
}

/// Columns of A (q×s), B (p×s) and their DL states.
struct FactorBlock {
  Matrix A;
  Matrix B;
  std::vector<DlColumnState> dl;

  Eigen::Index columns() const noexcept { return A.cols(); }
};

/// Factor storage for all candidate ranks.
///  RRn:  q blocks, block s-1 holds the s columns of (A_s, B_s).
///  RRcs: one block of q shared columns; A_u is its first u columns.
struct FactorCollection {
  Parametrization kind = Parametrization::RRcs;
  std::vector<FactorBlock> blocks;

  Eigen::Index max_rank() const {
    return kind == Parametrization::RRcs ? blocks.front().columns()
                                         : static_cast<Eigen::Index>(blocks.size());
  }

  Eigen::Index column_pairs() const {
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.columns();
    return total;
  }

  Matrix A_of(Eigen::Index rank) const {
    return kind == Parametrization::RRcs ? Matrix(blocks.front().A.leftCols(rank))
                                         : blocks[rank - 1].A;
  }
  Matrix B_of(Eigen::Index rank) const {
    return kind == Parametrization::RRcs ? Matrix(blocks.front().B.leftCols(rank))
                                         : blocks[rank - 1].B;
  }
};

struct ChainState {
  int u = 1;  // rank allocation, 1..q
  Vector w;   // mixture weights on ranks
  SpdMatrix sigma;
  FactorCollection factors;
};

struct DrawMeta {
  std::uint64_t seed = 0;
  int n_iter = 0;
  int burn_in = 0;
  int thin = 1;
  Parametrization parametrization = Parametrization::RRcs;
};

/// Retained post-burn-in draws of the rank and of C = B_u A_uᵀ.
struct PosteriorDraws {
  std::vector<int> u_draws;
  std::vector<Matrix> C_draws;
  std::vector<Matrix> sigma_draws;  // empty unless requested
  std::vector<Vector> w_draws;      // empty unless requested
  std::vector<DrawMeta> meta;       // one entry per merged chain

  std::size_t size() const noexcept { return u_draws.size(); }

  void append(const PosteriorDraws& other) {
    u_draws.insert(u_draws.end(), other.u_draws.begin(), other.u_draws.end());
    C_draws.insert(C_draws.end(), other.C_draws.begin(), other.C_draws.end());
    sigma_draws.insert(sigma_draws.end(), other.sigma_draws.begin(), other.sigma_draws.end());
    w_draws.insert(w_draws.end(), other.w_draws.begin(), other.w_draws.end());
    meta.insert(meta.end(), other.meta.begin(), other.meta.end());
  }
};

inline Matrix compose_C(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols())
    throw DomainError("compose_C: A has " + std::to_string(A.cols()) + " columns, B has " +
                      std::to_string(B.cols()));
  return B * A.transpose();
}

/// Residual cross-product (Y - XC)ᵀ(Y - XC) from the cached Gram blocks.
inline Matrix residual_crossprod(const RegressionData& data, const Matrix& C) {
  const Matrix xty_c = data.XtY().transpose() * C;  // YᵀX C
  Matrix s = data.YtY() - xty_c - xty_c.transpose() + C.transpose() * data.XtX() * C;
  return 0.5 * (s + s.transpose());
}

/// Gaussian log-likelihood of Y given C = B_s A_sᵀ and Σ.
inline double loglik_C(const RegressionData& data, const Matrix& C, const SpdMatrix& sigma) {
  if (C.rows() != data.p() || C.cols() != data.q() || sigma.dim() != data.q())
    throw DomainError("loglik: dimension mismatch");
  const auto n = static_cast<double>(data.n());
  const auto q = static_cast<double>(data.q());
  const Matrix s = residual_crossprod(data, C);
  const double trace = sigma.solve(s).trace();
  return -0.5 * n * q * std::log(2.0 * std::numbers::pi) - 0.5 * n * sigma.log_det() - 0.5 * trace;
}

inline double loglik_rank(const RegressionData& data, const Matrix& A_s, const Matrix& B_s,
                          const SpdMatrix& sigma) {
  return loglik_C(data, compose_C(A_s, B_s), sigma);
}

inline double dl_log_phi(double phi) { return std::log(std::max(phi, 1e-300)); }

/// log Ga(τ; αp, rate ½) + log Dir(φ; α·1), as a function of α on [lower, upper].
inline double alpha_log_conditional(double alpha, double tau, const Vector& phi, AlphaRange range) {
  if (!(alpha >= range.lower && alpha <= range.upper))
    throw DomainError("alpha " + std::to_string(alpha) + " outside [" +
                      std::to_string(range.lower) + ", " + std::to_string(range.upper) + "]");
  if (!(tau > 0.0)) throw DomainError("alpha_log_conditional: tau must be positive");
  using boost::math::lgamma;
  const auto p = static_cast<double>(phi.size());
  const double shape = alpha * p;
  double sum_log_phi = 0.0;
  for (Eigen::Index l = 0; l < phi.size(); ++l) sum_log_phi += dl_log_phi(phi[l]);
  const double log_gamma_density =
      shape * std::log(0.5) - lgamma(shape) + (shape - 1.0) * std::log(tau) - 0.5 * tau;
  const double log_dirichlet_density =
      lgamma(shape) - p * lgamma(alpha) + (alpha - 1.0) * sum_log_phi;
  return log_gamma_density + log_dirichlet_density;
}

}  // namespace brecs
