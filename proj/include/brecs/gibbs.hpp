#pragma once

// Gibbs samplers for the mixture-of-ranks reduced-rank regression.
//
// One sweep, for both parametrizations:
//   1. u | A, B, Σ, w      categorical on log w_s + loglik_s, s = 1..q
//   2. w | u               Dir(γ + e_u)
//   3. Σ | u, A_u, B_u     IW(ν + n, Υ + RᵀR), R = Y - X B_u A_uᵀ
//   4. active factors      RRn: vec(A_u) then vec(B_uᵀ) jointly;
//                          RRcs: (a_s, b_s) column by column, s = 1..u
//   5. DL scales of every active column, then α on a grid
//   6. inactive columns redrawn from the prior (pseudo-prior = prior)
//
// All Gaussian conditionals are assembled from XᵀX, XᵀY and YᵀY, so the
// per-sweep cost does not depend on n.

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "brecs/distributions.hpp"
#include "brecs/model.hpp"

namespace brecs {

struct SamplerConfig {
  Parametrization parametrization = Parametrization::RRcs;
  int n_iter = 7000;
  int burn_in = 2000;
  int thin = 1;
  std::uint64_t seed = 1;
  bool store_sigma = false;
  bool store_w = false;

  void validate() const {
    detail::require(n_iter > 0, "n_iter must be positive");
    detail::require(burn_in >= 0 && burn_in < n_iter, "burn_in must lie in [0, n_iter)");
    detail::require(thin >= 1, "thin must be at least 1");
  }

  int retained() const { return (n_iter - burn_in + thin - 1) / thin; }
};

/// Column-pair update counts (posterior or prior draws of an (a, b) pair).
struct UpdateCounters {
  long long sweeps = 0;
  long long posterior_pairs = 0;
  long long prior_pairs = 0;

  long long column_pairs() const { return posterior_pairs + prior_pairs; }
};

/// Gaussian full conditional in precision form: N(Ω⁻¹h, Ω⁻¹).
struct GaussianConditional {
  Matrix precision;
  Vector shift;

  Vector mean() const { return robust_cholesky(precision, "conditional mean").solve(shift); }
};

// Variance floor for the DL prior variances entering Λ⁻¹.
inline constexpr double kPriorVarianceFloor = 1e-20;
// Floor on |b_lh| inside the GiG / inverse-Gaussian parameters.
inline constexpr double kAbsCoefFloor = 1e-10;
// Floor on φ_lh where it appears as a divisor.
inline constexpr double kPhiFloor = 1e-300;

// ---------------------------------------------------------------------------
// rank, weights, covariance

/// New rank allocation (1-based).
inline int update_rank(const ChainState& state, const RegressionData& data, RngHandle& rng) {
  const Eigen::Index q = data.q();
  std::vector<double> lw(static_cast<std::size_t>(q));
  for (Eigen::Index s = 1; s <= q; ++s) {
    const double ws = state.w[s - 1];
    const double log_w = ws > 0.0 ? std::log(ws) : -std::numeric_limits<double>::infinity();
    lw[s - 1] = std::isfinite(log_w)
                    ? log_w + loglik_rank(data, state.factors.A_of(s), state.factors.B_of(s), state.sigma)
                    : log_w;
  }
  return static_cast<int>(sample_categorical_log(lw, rng)) + 1;
}

inline Vector update_weights(int u, const Vector& gamma, RngHandle& rng) {
  if (u < 1 || u > gamma.size()) throw DomainError("update_weights: rank out of range");
  Vector post = gamma;
  post[u - 1] += 1.0;
  return sample_dirichlet(post, rng);
}

inline SpdMatrix update_sigma(const ChainState& state, const RegressionData& data,
                              const HyperParams& hp, RngHandle& rng) {
  const Matrix C = compose_C(state.factors.A_of(state.u), state.factors.B_of(state.u));
  const SpdMatrix scale(hp.upsilon.value() + residual_crossprod(data, C), "Sigma posterior scale");
  return sample_inverse_wishart(hp.nu + static_cast<double>(data.n()), scale, rng);
}

// ---------------------------------------------------------------------------
// RRn: joint updates of vec(A_u) and vec(B_uᵀ)

/// vec(A) (column-major, index h*q + j) given B: Ω = I + (ZᵀZ) ⊗ Σ⁻¹, h = vec(Σ⁻¹YᵀZ), Z = XB.
inline GaussianConditional rrn_a_conditional(const Matrix& B, const SpdMatrix& sigma,
                                             const RegressionData& data) {
  const Eigen::Index q = data.q(), u = B.cols();
  const Matrix sigma_inv = sigma.inverse();
  const Matrix ztz = B.transpose() * data.XtX() * B;
  const Matrix ytz = data.XtY().transpose() * B;  // q×u
  GaussianConditional g{Matrix::Identity(q * u, q * u), Vector(q * u)};
  for (Eigen::Index h = 0; h < u; ++h)
    for (Eigen::Index k = 0; k < u; ++k)
      g.precision.block(h * q, k * q, q, q) += ztz(h, k) * sigma_inv;
  const Matrix sy = sigma_inv * ytz;
  g.shift = Eigen::Map<const Vector>(sy.data(), q * u);
  return g;
}

/// vec(Bᵀ) (index l*u + h) given A: Ω = Λ⁻¹ + (XᵀX) ⊗ (AᵀΣ⁻¹A), h = vec(AᵀΣ⁻¹YᵀX).
inline GaussianConditional rrn_b_conditional(const Matrix& A, const std::vector<DlColumnState>& dl,
                                             const SpdMatrix& sigma, const RegressionData& data) {
  const Eigen::Index p = data.p(), u = A.cols();
  const Matrix sia = sigma.solve(A);  // Σ⁻¹A, q×u
  const Matrix m = A.transpose() * sia;
  GaussianConditional g{Matrix(p * u, p * u), Vector(p * u)};
  for (Eigen::Index l = 0; l < p; ++l)
    for (Eigen::Index k = 0; k < p; ++k) g.precision.block(l * u, k * u, u, u) = data.XtX()(l, k) * m;
  for (Eigen::Index h = 0; h < u; ++h) {
    const Vector var = dl[h].prior_variances();
    for (Eigen::Index l = 0; l < p; ++l)
      g.precision(l * u + h, l * u + h) += 1.0 / std::max(var[l], kPriorVarianceFloor);
  }
  const Matrix shift = sia.transpose() * data.XtY().transpose();  // u×p
  g.shift = Eigen::Map<const Vector>(shift.data(), p * u);
  return g;
}

inline void update_factors_rrn(ChainState& state, const RegressionData& data, RngHandle& rng) {
  if (state.factors.kind != Parametrization::RRn)
    throw DomainError("update_factors_rrn requires the RRn parametrization");
  FactorBlock& blk = state.factors.blocks[state.u - 1];
  const Eigen::Index q = data.q(), p = data.p(), u = blk.columns();

  const GaussianConditional ga = rrn_a_conditional(blk.B, state.sigma, data);
  const Vector va = sample_mvn_precision(ga.shift, ga.precision, rng, "RRn A-update");
  blk.A = Eigen::Map<const Matrix>(va.data(), q, u);

  const GaussianConditional gb = rrn_b_conditional(blk.A, blk.dl, state.sigma, data);
  const Vector vb = sample_mvn_precision(gb.shift, gb.precision, rng, "RRn B-update");
  blk.B = Eigen::Map<const Matrix>(vb.data(), u, p).transpose();
}

// ---------------------------------------------------------------------------
// RRcs: column-by-column updates

namespace detail {

// Σ_{h<u, h≠s} a_h b_hᵀ XᵀX b_s and Σ_{h<u, h≠s} XᵀX b_h (a_hᵀ Σ⁻¹ a_s) share this loop shape.
inline Matrix other_columns(const Matrix& M, Eigen::Index u, Eigen::Index s) {
  Matrix out(M.rows(), u - 1);
  for (Eigen::Index h = 0, k = 0; h < u; ++h)
    if (h != s) out.col(k++) = M.col(h);
  return out;
}

}  // namespace detail

/// a_s given the other active columns: Ω = I + (b_sᵀXᵀXb_s) Σ⁻¹, h = Σ⁻¹ Rᵀ X b_s.
/// `s` is zero-based; `u` is the active rank.
inline GaussianConditional rrcs_a_conditional(const FactorBlock& blk, Eigen::Index s, Eigen::Index u,
                                              const SpdMatrix& sigma, const RegressionData& data) {
  const Eigen::Index q = data.q();
  const Vector xtx_bs = data.XtX() * blk.B.col(s);
  const double zz = blk.B.col(s).dot(xtx_bs);
  Vector rtz = data.XtY().transpose() * blk.B.col(s);
  if (u > 1) {
    const Matrix a_o = detail::other_columns(blk.A, u, s);
    const Matrix b_o = detail::other_columns(blk.B, u, s);
    rtz -= a_o * (b_o.transpose() * xtx_bs);
  }
  const Matrix sigma_inv = sigma.inverse();
  return {Matrix::Identity(q, q) + zz * sigma_inv, sigma_inv * rtz};
}

/// b_s given a_s: Ω = Λ_s⁻¹ + (a_sᵀΣ⁻¹a_s) XᵀX, h = Xᵀ R Σ⁻¹ a_s.
inline GaussianConditional rrcs_b_conditional(const FactorBlock& blk, Eigen::Index s, Eigen::Index u,
                                              const SpdMatrix& sigma, const RegressionData& data) {
  const Vector sia = sigma.solve(blk.A.col(s));
  const double c = blk.A.col(s).dot(sia);
  Vector shift = data.XtY() * sia;
  if (u > 1) {
    const Matrix a_o = detail::other_columns(blk.A, u, s);
    const Matrix b_o = detail::other_columns(blk.B, u, s);
    shift -= data.XtX() * (b_o * (a_o.transpose() * sia));
  }
  Matrix precision = c * data.XtX();
  const Vector var = blk.dl[s].prior_variances();
  for (Eigen::Index l = 0; l < precision.rows(); ++l)
    precision(l, l) += 1.0 / std::max(var[l], kPriorVarianceFloor);
  return {std::move(precision), std::move(shift)};
}

inline void update_factor_columns_rrcs(ChainState& state, const RegressionData& data, RngHandle& rng) {
  if (state.factors.kind != Parametrization::RRcs)
    throw DomainError("update_factor_columns_rrcs requires the RRcs parametrization");
  FactorBlock& blk = state.factors.blocks.front();
  const Eigen::Index u = state.u;
  for (Eigen::Index s = 0; s < u; ++s) {
    const GaussianConditional ga = rrcs_a_conditional(blk, s, u, state.sigma, data);
    blk.A.col(s) = sample_mvn_precision(ga.shift, ga.precision, rng, "RRcs a-update");
    const GaussianConditional gb = rrcs_b_conditional(blk, s, u, state.sigma, data);
    blk.B.col(s) = sample_mvn_precision(gb.shift, gb.precision, rng, "RRcs b-update");
  }
}

// ---------------------------------------------------------------------------
// Dirichlet-Laplace scales

struct GigParams {
  double order, a, b;
};

/// τ | φ, b (ψ integrated out): GiG(p(α-1), 1, 2 Σ_l |b_l|/φ_l).
inline GigParams dl_global_conditional(const Vector& b, const Vector& phi, double alpha) {
  double acc = 0.0;
  for (Eigen::Index l = 0; l < b.size(); ++l)
    acc += std::max(std::abs(b[l]), kAbsCoefFloor) / std::max(phi[l], kPhiFloor);
  return {static_cast<double>(b.size()) * (alpha - 1.0), 1.0, 2.0 * acc};
}

/// Blocked draw of (φ, τ, ψ) | b, α:
///   T_l ~ GiG(α-1, 1, 2|b_l|), φ = T / ΣT      (τ and ψ integrated out)
///   τ ~ GiG(p(α-1), 1, 2 Σ|b_l|/φ_l)           (ψ integrated out)
///   1/ψ_l ~ iG(φ_l τ / |b_l|, 1)
inline DlColumnState update_dl_locals(const Vector& b, const DlColumnState& dl, RngHandle& rng) {
  const Eigen::Index p = b.size();
  if (dl.phi.size() != p) throw DomainError("update_dl_locals: b and phi lengths differ");
  DlColumnState next = dl;

  Vector t(p);
  for (Eigen::Index l = 0; l < p; ++l)
    t[l] = sample_gig(dl.alpha - 1.0, 1.0, 2.0 * std::max(std::abs(b[l]), kAbsCoefFloor), rng);
  next.phi = t / t.sum();

  const GigParams g = dl_global_conditional(b, next.phi, dl.alpha);
  next.tau = sample_gig(g.order, g.a, g.b, rng);

  next.psi.resize(p);
  for (Eigen::Index l = 0; l < p; ++l) {
    const double mean = std::max(next.phi[l], kPhiFloor) * next.tau /
                        std::max(std::abs(b[l]), kAbsCoefFloor);
    next.psi[l] = 1.0 / sample_inverse_gaussian(mean, 1.0, rng);
  }
  return next;
}

inline Vector alpha_grid(const HyperParams& hp) {
  return Vector::LinSpaced(hp.alpha_grid_size, hp.alpha_lower, hp.alpha_upper);
}

/// Griddy Gibbs: discrete draw over the uniform α grid, weights ∝ exp(log-conditional).
inline double update_alpha_griddy(const DlColumnState& dl, const HyperParams& hp, RngHandle& rng) {
  const Vector grid = alpha_grid(hp);
  std::vector<double> lw(static_cast<std::size_t>(grid.size()));
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    lw[i] = alpha_log_conditional(grid[i], dl.tau, dl.phi, hp.alpha_range());
  return grid[static_cast<Eigen::Index>(sample_categorical_log(lw, rng))];
}

/// Full prior draw of one DL column: α ~ U, φ ~ Dir(α), τ ~ Ga(αp, ½), ψ ~ Exp(½).
inline DlColumnState sample_dl_prior(Eigen::Index p, const HyperParams& hp, RngHandle& rng) {
  DlColumnState dl;
  dl.alpha = hp.alpha_lower + (hp.alpha_upper - hp.alpha_lower) * rng.uniform();
  const Vector conc = Vector::Constant(p, dl.alpha);
  dl.phi = sample_dirichlet(conc, rng);
  dl.tau = sample_gamma_shape_rate(dl.alpha * static_cast<double>(p), 0.5, rng);
  dl.psi.resize(p);
  for (Eigen::Index l = 0; l < p; ++l) dl.psi[l] = sample_exponential(0.5, rng);
  return dl;
}

inline void draw_column_from_prior(FactorBlock& blk, Eigen::Index h, const HyperParams& hp,
                                   RngHandle& rng) {
  for (Eigen::Index j = 0; j < blk.A.rows(); ++j) blk.A(j, h) = rng.normal();
  blk.dl[h] = sample_dl_prior(blk.B.rows(), hp, rng);
  const Vector sd = blk.dl[h].prior_variances().cwiseSqrt();
  for (Eigen::Index l = 0; l < blk.B.rows(); ++l) blk.B(l, h) = sd[l] * rng.normal();
}

/// Redraws every inactive column pair (and its DL scales) from the prior.
/// RRn: all blocks s ≠ u. RRcs: shared columns u+1..q.
inline void refresh_inactive_from_prior(ChainState& state, const HyperParams& hp, RngHandle& rng,
                                        UpdateCounters* counters = nullptr) {
  auto& f = state.factors;
  long long drawn = 0;
  if (f.kind == Parametrization::RRn) {
    for (std::size_t s = 0; s < f.blocks.size(); ++s) {
      if (static_cast<int>(s) + 1 == state.u) continue;
      for (Eigen::Index h = 0; h < f.blocks[s].columns(); ++h, ++drawn)
        draw_column_from_prior(f.blocks[s], h, hp, rng);
    }
  } else {
    auto& blk = f.blocks.front();
    for (Eigen::Index h = state.u; h < blk.columns(); ++h, ++drawn) draw_column_from_prior(blk, h, hp, rng);
  }
  if (counters) counters->prior_pairs += drawn;
}

// ---------------------------------------------------------------------------
// chain driver

inline FactorCollection prior_factors(Parametrization kind, Eigen::Index q, Eigen::Index p,
                                      const HyperParams& hp, RngHandle& rng) {
  FactorCollection f;
  f.kind = kind;
  auto make_block = [&](Eigen::Index cols) {
    FactorBlock blk{Matrix(q, cols), Matrix(p, cols), std::vector<DlColumnState>(cols)};
    for (Eigen::Index h = 0; h < cols; ++h) draw_column_from_prior(blk, h, hp, rng);
    return blk;
  };
  if (kind == Parametrization::RRn)
    for (Eigen::Index s = 1; s <= q; ++s) f.blocks.push_back(make_block(s));
  else
    f.blocks.push_back(make_block(q));
  return f;
}

/// u uniform on 1..q, w = γ/Σγ, Σ = I, factors from the prior.
inline ChainState initialize_state(const RegressionData& data, const HyperParams& hp,
                                   Parametrization kind, RngHandle& rng) {
  ChainState st;
  const Eigen::Index q = data.q();
  st.u = 1 + static_cast<int>(std::min<double>(static_cast<double>(q) - 1,
                                                std::floor(rng.uniform() * static_cast<double>(q))));
  st.w = hp.gamma / hp.gamma.sum();
  st.sigma = SpdMatrix::identity(q);
  st.factors = prior_factors(kind, q, data.p(), hp, rng);
  return st;
}

/// Owns one chain: its state, stream and counters.
class GibbsSampler {
 public:
  GibbsSampler(RegressionData data, HyperParams hp, SamplerConfig cfg)
      : data_(std::move(data)), hp_(std::move(hp)), cfg_(cfg), rng_(cfg.seed) {
    hp_.validate(data_.q());
    state_ = initialize_state(data_, hp_, cfg_.parametrization, rng_);
  }

  const ChainState& state() const noexcept { return state_; }
  ChainState& mutable_state() noexcept { return state_; }
  const RegressionData& data() const noexcept { return data_; }
  const HyperParams& hyperparams() const noexcept { return hp_; }
  const UpdateCounters& counters() const noexcept { return counters_; }
  RngHandle& rng() noexcept { return rng_; }

  // Keeps w fixed (e.g. at a vertex e_s, which pins the rank at s).
  void freeze_weights(Vector w) {
    state_.w = std::move(w);
    weights_frozen_ = true;
  }

  void set_responses(Matrix y) { data_.set_responses(std::move(y)); }

  void sweep() {
    const long long it = counters_.sweeps;
    guarded(it, "rank", [&] { state_.u = update_rank(state_, data_, rng_); });
    if (!weights_frozen_)
      guarded(it, "weights", [&] { state_.w = update_weights(state_.u, hp_.gamma, rng_); });
    guarded(it, "sigma", [&] { state_.sigma = update_sigma(state_, data_, hp_, rng_); });
    guarded(it, "factors", [&] {
      if (state_.factors.kind == Parametrization::RRn)
        update_factors_rrn(state_, data_, rng_);
      else
        update_factor_columns_rrcs(state_, data_, rng_);
    });
    counters_.posterior_pairs += state_.u;

    FactorBlock& blk = state_.factors.kind == Parametrization::RRn
                           ? state_.factors.blocks[state_.u - 1]
                           : state_.factors.blocks.front();
    guarded(it, "dl-locals", [&] {
      for (int h = 0; h < state_.u; ++h) blk.dl[h] = update_dl_locals(blk.B.col(h), blk.dl[h], rng_);
    });
    guarded(it, "alpha", [&] {
      for (int h = 0; h < state_.u; ++h) blk.dl[h].alpha = update_alpha_griddy(blk.dl[h], hp_, rng_);
    });
    guarded(it, "inactive-refresh", [&] { refresh_inactive_from_prior(state_, hp_, rng_, &counters_); });
    ++counters_.sweeps;
  }

  Matrix current_C() const {
    return compose_C(state_.factors.A_of(state_.u), state_.factors.B_of(state_.u));
  }

  PosteriorDraws run() {
    cfg_.validate();
    PosteriorDraws out;
    const auto m = static_cast<std::size_t>(cfg_.retained());
    out.u_draws.reserve(m);
    out.C_draws.reserve(m);
    for (int it = 0; it < cfg_.n_iter; ++it) {
      sweep();
      if (it < cfg_.burn_in || (it - cfg_.burn_in) % cfg_.thin != 0) continue;
      Matrix C = current_C();
      if (!C.allFinite())
        throw NumericError("iteration " + std::to_string(it) + ": non-finite coefficient draw");
      out.u_draws.push_back(state_.u);
      out.C_draws.push_back(std::move(C));
      if (cfg_.store_sigma) out.sigma_draws.push_back(state_.sigma.value());
      if (cfg_.store_w) out.w_draws.push_back(state_.w);
    }
    out.meta.push_back({cfg_.seed, cfg_.n_iter, cfg_.burn_in, cfg_.thin, cfg_.parametrization});
    return out;
  }

 private:
  template <class F>
  static void guarded(long long it, const char* name, F&& f) {
    try {
      f();
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(it) + ", update " + name + ": " + e.what());
    }
  }

  RegressionData data_;
  HyperParams hp_;
  SamplerConfig cfg_;
  RngHandle rng_;
  ChainState state_;
  UpdateCounters counters_;
  bool weights_frozen_ = false;
};

inline PosteriorDraws run_chain(const RegressionData& data, const HyperParams& hp,
                                const SamplerConfig& cfg) {
  cfg.validate();
  return GibbsSampler(data, hp, cfg).run();
}

/// Runs `chains` independent chains (seeds derived from cfg.seed) on up to
/// `jobs` threads and concatenates their draws in chain order.
inline PosteriorDraws run_chains(const RegressionData& data, const HyperParams& hp,
                                 const SamplerConfig& cfg, int chains, int jobs = 1) {
  detail::require(chains >= 1, "need at least one chain");
  cfg.validate();
  std::vector<PosteriorDraws> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  auto work = [&](int c) {
    try {
      SamplerConfig c_cfg = cfg;
      c_cfg.seed = chains == 1 ? cfg.seed : derive_seed(cfg.seed, static_cast<std::uint64_t>(c));
      results[c] = run_chain(data, hp, c_cfg);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  jobs = std::max(1, std::min(jobs, chains));
  for (int start = 0; start < chains; start += jobs) {
    std::vector<std::thread> pool;
    for (int c = start; c < std::min(chains, start + jobs); ++c) pool.emplace_back(work, c);
    for (auto& t : pool) t.join();
  }
  PosteriorDraws merged;
  for (int c = 0; c < chains; ++c) {
    if (errors[c]) std::rethrow_exception(errors[c]);
    merged.append(results[c]);
  }
  return merged;
}

}  // namespace brecs
