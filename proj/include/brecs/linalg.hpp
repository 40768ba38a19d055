#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <string>

#include "brecs/errors.hpp"

namespace brecs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct JitterPolicy {
  double base = 1e-10;   // multiple of the mean diagonal added on the first retry
  double growth = 10.0;  // escalation factor per retry
  int retries = 3;
};

/// Lower Cholesky factor of a symmetric matrix. On failure, adds
/// base * mean(diag) * I and retries with geometric escalation before giving up.
/// `context` is prepended to the error message.
inline Eigen::LLT<Matrix> robust_cholesky(const Matrix& m, const std::string& context = "cholesky",
                                          const JitterPolicy& policy = {}) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  if (!m.allFinite()) throw NumericError(context + ": matrix has non-finite entries");
  double mean_diag = m.diagonal().mean();
  if (!(mean_diag > 0.0)) mean_diag = 1.0;
  double eps = policy.base * mean_diag;
  for (int attempt = 0; attempt < policy.retries; ++attempt, eps *= policy.growth) {
    Matrix jittered = m;
    jittered.diagonal().array() += eps;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericError(context + ": Cholesky factorization failed after " +
                     std::to_string(policy.retries) + " jitter retries (dim " +
                     std::to_string(m.rows()) + ")");
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Symmetric positive-definite matrix together with its lower Cholesky factor.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(const Matrix& m, const std::string& context = "SpdMatrix") {
    if (m.rows() == 0 || m.rows() != m.cols())
      throw DomainError(context + ": matrix must be square and non-empty");
    if (!is_symmetric(m)) throw DomainError(context + ": matrix is not symmetric");
    value_ = 0.5 * (m + m.transpose());
    Eigen::LLT<Matrix> llt = [&] {
      try {
        return robust_cholesky(value_, context);
      } catch (const NumericError& e) {
        throw DomainError(std::string(e.what()) + " (not positive definite)");
      }
    }();
    chol_ = llt.matrixL();
  }

  static SpdMatrix identity(Eigen::Index dim) { return SpdMatrix(Matrix::Identity(dim, dim)); }

  Eigen::Index dim() const noexcept { return value_.rows(); }
  const Matrix& value() const noexcept { return value_; }
  const Matrix& cholesky_lower() const noexcept { return chol_; }

  double log_det() const { return 2.0 * chol_.diagonal().array().log().sum(); }

  // Solves value() * x = rhs.
  Matrix solve(const Matrix& rhs) const {
    Matrix y = chol_.triangularView<Eigen::Lower>().solve(rhs);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  Matrix inverse() const { return solve(Matrix::Identity(dim(), dim())); }

 private:
  Matrix value_;
  Matrix chol_;
};

}  // namespace brecs
