#pragma once

// JSON and plain-text renderings of fits, selection reports and experiment tables,
// plus the draws archive consumed by `brecs summarize`.

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "brecs/io.hpp"
#include "brecs/selection.hpp"
#include "brecs/simulation.hpp"

namespace brecs {

using Json = nlohmann::ordered_json;

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// ζ ≤ 1/3 low, ≤ 2/3 medium, otherwise high.
inline const char* zeta_bucket(double zeta) {
  if (zeta <= 1.0 / 3.0) return "low";
  if (zeta <= 2.0 / 3.0) return "medium";
  return "high";
}

inline const char* to_string(Verdict v) { return v == Verdict::Keep ? "keep" : "exclude"; }

inline Json to_json(const SelectionReport& r) {
  Json j;
  j["draws"] = r.draws;
  j["sr_bar"] = r.sr_bar;
  j["p_bar"] = r.p_bar;
  j["pip"] = to_json(r.pip);
  j["zeta"] = to_json(r.zeta);
  j["c_hat"] = to_json(r.C_hat);
  j["ri"] = to_json(r.ri);
  Json cov = Json::array();
  for (std::size_t k = 0; k < r.ri_summary.size(); ++k) {
    const auto& s = r.ri_summary[k];
    cov.push_back({{"covariate", k + 1},
                   {"mode", s.mode},
                   {"mean", s.mean},
                   {"std", s.std},
                   {"q25", s.q25},
                   {"q50", s.q50},
                   {"q75", s.q75},
                   {"survival", r.verdicts[k].survival},
                   {"verdict", to_string(r.verdicts[k].verdict)}});
  }
  j["covariates"] = std::move(cov);
  return j;
}

inline Json to_json(const Chi2Result& c) {
  return {{"statistic", c.statistic}, {"df", c.df}, {"p_value", c.p_value}};
}

inline Json to_json(const Moments& m) { return {{"mean", m.mean}, {"sd", m.sd}, {"count", m.count}}; }

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const ExperimentSummary& e) {
  Json j;
  j["dgp"] = e.spec.label();
  j["n"] = e.spec.n;
  j["q"] = e.spec.q;
  j["p"] = e.spec.p;
  j["r0"] = e.spec.r0;
  j["x_corr"] = e.spec.x_corr;
  j["e_corr"] = e.spec.e_corr;
  j["parametrization"] = to_string(e.sampler.parametrization);
  j["n_iter"] = e.sampler.n_iter;
  j["burn_in"] = e.sampler.burn_in;
  j["replications"] = e.rows.size();
  j["rank"] = to_json(e.rank);
  j["mse"] = to_json(e.mse);
  j["mcc"] = to_json(e.mcc);
  j["tpr"] = to_json(e.tpr);
  j["fnr"] = to_json(e.fnr);
  Json reps = Json::array();
  for (const auto& r : e.rows)
    reps.push_back({{"replication", r.replication},
                    {"data_seed", r.data_seed},
                    {"chain_seed", r.chain_seed},
                    {"rank_map", r.metrics.rank_map},
                    {"mse", r.metrics.mse},
                    {"mcc", r.metrics.cls.mcc},
                    {"tpr", optional_json(r.metrics.cls.tpr)},
                    {"fnr", optional_json(r.metrics.cls.fnr)},
                    {"rank_posterior", to_json(r.metrics.rank_posterior)}});
  j["rows"] = std::move(reps);
  return j;
}

// ---------------------------------------------------------------------------
// aligned text

/// Right-aligned columns separated by two spaces.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw DomainError("TextTable: row width mismatch");
    rows_.push_back(std::move(row));
  }

  void print(std::ostream& out) const {
    std::vector<std::size_t> w(header_.size());
    for (std::size_t c = 0; c < w.size(); ++c) {
      w[c] = header_[c].size();
      for (const auto& r : rows_) w[c] = std::max(w[c], r[c].size());
    }
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "  " : "") << std::setw(static_cast<int>(w[c])) << r[c];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fixed(double x, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

inline void print_covariate_summary(std::ostream& out, const SelectionReport& r) {
  TextTable t({"covariate", "mode", "mean", "std", "Q25", "Q50", "Q75", "P(RI>sr)", "verdict"});
  for (std::size_t k = 0; k < r.ri_summary.size(); ++k) {
    const auto& s = r.ri_summary[k];
    t.add({std::to_string(k + 1), fixed(s.mode), fixed(s.mean), fixed(s.std), fixed(s.q25), fixed(s.q50),
           fixed(s.q75), fixed(r.verdicts[k].survival), to_string(r.verdicts[k].verdict)});
  }
  t.print(out);
}

inline void print_rank_posterior(std::ostream& out, const Vector& post) {
  TextTable t({"rank", "probability"});
  for (Eigen::Index s = 0; s < post.size(); ++s) t.add({std::to_string(s + 1), fixed(post[s], 4)});
  t.print(out);
}

// ---------------------------------------------------------------------------
// draws archive: one row per retained draw, columns u, C[1,1], C[2,1], ... (column-major)

inline void write_draws(const std::string& path, const PosteriorDraws& d, const Vector& column_norms_sq,
                        const std::vector<std::string>& comments = {}) {
  if (d.size() == 0) throw DomainError("write_draws: no draws");
  const Eigen::Index p = d.C_draws.front().rows(), q = d.C_draws.front().cols();
  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_comments(out, comments);
  out << "# p=" << p << " q=" << q << '\n';
  out << "# column_norms_sq=";
  for (Eigen::Index j = 0; j < p; ++j) out << (j ? " " : "") << format_double(column_norms_sq[j]);
  out << '\n' << 'u';
  for (Eigen::Index k = 1; k <= q; ++k)
    for (Eigen::Index j = 1; j <= p; ++j) out << ",c_" << j << '_' << k;
  out << '\n';
  for (std::size_t m = 0; m < d.size(); ++m) {
    out << d.u_draws[m];
    const Matrix& C = d.C_draws[m];
    for (Eigen::Index i = 0; i < C.size(); ++i) out << ',' << format_double(C.data()[i]);
    out << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

struct DrawsArchive {
  PosteriorDraws draws;
  Vector column_norms_sq;
};

inline DrawsArchive read_draws(const std::string& path) {
  const CsvTable t = read_csv(path);
  Eigen::Index p = -1, q = -1;
  Vector norms;
  for (const auto& c : t.comments) {
    if (c.rfind("p=", 0) == 0) std::sscanf(c.c_str(), "p=%ld q=%ld", &p, &q);
    if (c.rfind("column_norms_sq=", 0) == 0) {
      std::istringstream s(c.substr(16));
      std::vector<double> v;
      for (double x; s >> x;) v.push_back(x);
      norms = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
  if (p < 1 || q < 1 || norms.size() != p) throw DataError(path + ": missing or malformed draws header");
  if (t.values.cols() != 1 + p * q) throw DataError(path + ": expected " + std::to_string(1 + p * q) + " columns");
  DrawsArchive a;
  a.column_norms_sq = norms;
  for (Eigen::Index m = 0; m < t.values.rows(); ++m) {
    a.draws.u_draws.push_back(static_cast<int>(t.values(m, 0)));
    Matrix C(p, q);
    for (Eigen::Index i = 0; i < p * q; ++i) C.data()[i] = t.values(m, 1 + i);
    a.draws.C_draws.push_back(std::move(C));
  }
  return a;
}

}  // namespace brecs
