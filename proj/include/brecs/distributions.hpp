#pragma once

// Random-variate generators for the sampler's full conditionals.
//
// Parameterization conventions (checked by the unit tests):
//   Gamma(shape, rate)        density ∝ x^(shape-1) exp(-rate x)
//   Exponential(rate)         mean 1/rate
//   InverseGaussian(μ, λ)     mean μ, variance μ³/λ
//   GiG(p, a, b)              density ∝ x^(p-1) exp(-(a x + b / x) / 2),  x > 0
//   InverseWishart(ν, Υ)      E[Σ] = Υ / (ν - d - 1)
//
// The GiG argument order (p, a, b) is the one the Dirichlet-Laplace updates use:
// τ ~ GiG(p(α-1), 1, 2 Σ|b_l|/φ_l) and T_l ~ GiG(α-1, 1, 2|b_l|).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "brecs/errors.hpp"
#include "brecs/linalg.hpp"
#include "brecs/rng.hpp"

namespace brecs {

namespace detail {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(v));
}

// Marsaglia-Tsang for shape >= 1, returning log of a Gamma(shape, 1) draw.
inline double log_gamma_draw_ge1(double shape, RngHandle& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

}  // namespace detail

/// Log of a Gamma(shape, rate) draw. Works in log space so that shape << 1
/// (boosted via U^(1/shape)) does not underflow.
inline double sample_log_gamma(double shape, double rate, RngHandle& rng) {
  detail::require_positive(shape, "gamma shape");
  detail::require_positive(rate, "gamma rate");
  double lg;
  if (shape >= 1.0) {
    lg = detail::log_gamma_draw_ge1(shape, rng);
  } else {
    lg = detail::log_gamma_draw_ge1(shape + 1.0, rng) + std::log(rng.uniform()) / shape;
  }
  return lg - std::log(rate);
}

inline double sample_gamma_shape_rate(double shape, double rate, RngHandle& rng) {
  double x = std::exp(sample_log_gamma(shape, rate, rng));
  // exp underflow for tiny shapes; clamp to the smallest positive normal.
  return std::max(x, std::numeric_limits<double>::min());
}

inline double sample_exponential(double rate, RngHandle& rng) {
  detail::require_positive(rate, "exponential rate");
  return -std::log(rng.uniform()) / rate;
}

inline double sample_chi_squared(double df, RngHandle& rng) {
  return 2.0 * sample_gamma_shape_rate(0.5 * df, 1.0, rng);
}

/// Michael-Schucany-Haas transformation.
inline double sample_inverse_gaussian(double mean, double shape, RngHandle& rng) {
  detail::require_positive(mean, "inverse-Gaussian mean");
  detail::require_positive(shape, "inverse-Gaussian shape");
  const double nu = rng.normal();
  const double y = nu * nu;
  double x;
  if (y == 0.0) {
    x = mean;
  } else {
    // Smaller root of the MSH quadratic, written as 4λ / (y (1 + s)²),
    // s = sqrt(1 + 4λ/(μ y)); free of the cancellation in the textbook form.
    const double s = std::sqrt(1.0 + 4.0 * shape / (mean * y));
    x = 4.0 * shape / (y * (1.0 + s) * (1.0 + s));
    if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  }
  if (rng.uniform() * (mean + x) <= mean) return x;
  return mean * (mean / x);
}

namespace detail {

// Mode of the standardized GiG density y^(λ-1) exp(-ω/2 (y + 1/y)).
inline double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0)
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms with mode shift (Hörmann & Leydold 2014), λ > 2 or ω > 3.
inline double gig_rou_shift(double lambda, double omega, RngHandle& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Roots of the cubic giving the minimal bounding rectangle.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms without shift, for moderate λ and ω.
inline double gig_rou_noshift(double lambda, double omega, RngHandle& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym =
      ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece hat for 0 <= λ < 1 and small ω (log-concavity fails).
inline double gig_small_omega(double lambda, double omega, RngHandle& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1, k2;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = (lambda == 0.0)
                  ? k1 * std::log(2.0 / (omega * omega))
                  : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * rng.uniform();
    double x, hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double a = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * a) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace detail

/// One draw from GiG(order, a, b): density ∝ x^(order-1) exp(-(a x + b/x)/2).
inline double sample_gig(double order, double a, double b, RngHandle& rng) {
  detail::require_positive(a, "GiG parameter a");
  detail::require_positive(b, "GiG parameter b");
  if (!std::isfinite(order)) throw DomainError("GiG order must be finite");

  // x = sqrt(b/a) * y, y standardized with ω = sqrt(ab); negative orders via y -> 1/y.
  const double scale = std::sqrt(b / a);
  const double omega = std::sqrt(a * b);
  const double lambda = std::abs(order);

  double y;
  if (lambda > 2.0 || omega > 3.0)
    y = detail::gig_rou_shift(lambda, omega, rng);
  else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    y = detail::gig_rou_noshift(lambda, omega, rng);
  else
    y = detail::gig_small_omega(lambda, omega, rng);

  double x = (order < 0.0) ? scale / y : scale * y;
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  if (!std::isfinite(x)) x = std::numeric_limits<double>::max();
  return x;
}

/// Dirichlet draw via normalized gammas, computed in log space.
inline Vector sample_dirichlet(std::span<const double> concentration, RngHandle& rng) {
  if (concentration.empty()) throw DomainError("Dirichlet concentration must be non-empty");
  const auto k = static_cast<Eigen::Index>(concentration.size());
  Vector logg(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(concentration[i] > 0.0))
      throw DomainError("Dirichlet concentration entries must be positive");
    logg[i] = sample_log_gamma(concentration[i], 1.0, rng);
  }
  const double mx = logg.maxCoeff();
  Vector w = (logg.array() - mx).exp();
  w /= w.sum();
  return w;
}

inline Vector sample_dirichlet(const Vector& concentration, RngHandle& rng) {
  return sample_dirichlet(std::span<const double>(concentration.data(), concentration.size()), rng);
}

/// Inverse-Wishart via the Bartlett factor T of a Wishart(ν, Υ⁻¹) draw:
/// with Υ = L Lᵀ, Σ⁻¹ = L⁻ᵀ T Tᵀ L⁻¹, hence Σ = K Kᵀ for K = L T⁻ᵀ.
inline SpdMatrix sample_inverse_wishart(double df, const SpdMatrix& scale, RngHandle& rng) {
  const Eigen::Index d = scale.dim();
  if (!(df > static_cast<double>(d) - 1.0))
    throw DomainError("inverse-Wishart df must exceed dim - 1");
  Matrix t = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    t(i, i) = std::sqrt(sample_chi_squared(df - static_cast<double>(i), rng));
    for (Eigen::Index j = 0; j < i; ++j) t(i, j) = rng.normal();
  }
  // K = L T⁻ᵀ  <=>  T Kᵀ = Lᵀ
  Matrix kt = t.triangularView<Eigen::Lower>().solve(Matrix(scale.cholesky_lower().transpose()));
  Matrix sigma = kt.transpose() * kt;
  sigma = 0.5 * (sigma + sigma.transpose());
  if (!sigma.allFinite()) throw NumericError("inverse-Wishart draw is not finite");
  return SpdMatrix(sigma, "inverse-Wishart draw");
}

/// Draw from N(Ω⁻¹h, Ω⁻¹) using one Cholesky factorization of Ω and two triangular solves.
inline Vector sample_mvn_precision(const Vector& shift, const Matrix& precision, RngHandle& rng,
                                   const std::string& context = "mvn precision") {
  if (precision.rows() != precision.cols() || precision.rows() != shift.size())
    throw DomainError(context + ": dimension mismatch");
  Eigen::LLT<Matrix> llt = robust_cholesky(precision, context);
  const auto lower = llt.matrixL();
  Vector v = lower.solve(shift);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += rng.normal();
  Vector x = llt.matrixU().solve(v);
  if (!x.allFinite()) throw NumericError(context + ": non-finite Gaussian draw");
  return x;
}

/// Log-sum-exp of a set of log weights; -inf when all are -inf.
inline double log_sum_exp(std::span<const double> lw) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : lw) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double v : lw) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

/// Zero-based index drawn with probability ∝ exp(log_weights), by inverse transform.
inline std::size_t sample_categorical_log(std::span<const double> log_weights, RngHandle& rng) {
  if (log_weights.empty()) throw DomainError("categorical: empty weight vector");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw DomainError("categorical: log weights must be finite or -inf");
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) throw DomainError("categorical: all log weights are -inf");
  std::vector<double> cdf(log_weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    acc += std::exp(log_weights[i] - mx);
    cdf[i] = acc;
  }
  const double u = rng.uniform() * acc;
  for (std::size_t i = 0; i < cdf.size(); ++i)
    if (u < cdf[i]) return i;
  // u * acc rounds up to acc: return the last index with positive mass.
  for (std::size_t i = cdf.size(); i-- > 0;)
    if (std::isfinite(log_weights[i])) return i;
  return cdf.size() - 1;
}

inline std::size_t sample_categorical_log(const std::vector<double>& log_weights, RngHandle& rng) {
  return sample_categorical_log(std::span<const double>(log_weights), rng);
}

}  // namespace brecs
