// brecs: command-line front end for rank estimation and covariate selection.
//
//   brecs fit        --y Y.csv --x X.csv [--center] [--intercept] --out DIR
//   brecs simulate   --dgp sparse --p-star 5 --n 100 --out DIR
//   brecs replicate  table2 --scale desk --out DIR
//   brecs summarize  --draws DIR/draws.csv --sr-bar 0.7 --p-bar 0.6 --out DIR2

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "brecs/brecs.hpp"

namespace fs = std::filesystem;
using namespace brecs;

namespace {

struct SamplerOpts {
  std::string param = "rrcs";
  int iters = 7000;
  int burnin = 2000;
  int thin = 1;
  std::uint64_t seed = 1;
  int chains = 1;
  int jobs = 1;
};

struct HyperOpts {
  double gamma = 1.0;
  double nu = -1.0;  // default q + 2
  double alpha_lower = -1.0;  // default 1/p
  double alpha_upper = 0.5;
  int alpha_grid = 100;

  HyperParams build(Eigen::Index q, Eigen::Index p) const {
    HyperParams hp = default_hyperparams(q, p);
    hp.gamma = Vector::Constant(q, gamma);
    if (nu > 0.0) hp.nu = nu;
    if (alpha_lower > 0.0) hp.alpha_lower = alpha_lower;
    hp.alpha_upper = alpha_upper;
    hp.alpha_grid_size = alpha_grid;
    hp.validate(q);
    return hp;
  }
};

struct SelectionOpts {
  double sr_bar = 0.70;
  double p_bar = 0.60;
};

void add_sampler_options(CLI::App* app, SamplerOpts& o) {
  app->add_option("--param", o.param, "parametrization")->check(CLI::IsMember({"rrn", "rrcs"}))->capture_default_str();
  app->add_option("--iters", o.iters, "total iterations per chain")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--burnin", o.burnin, "burn-in iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--thin", o.thin, "keep every thin-th draw")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--seed", o.seed, "master seed")->capture_default_str();
  app->add_option("--chains", o.chains, "independent chains")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_hyper_options(CLI::App* app, HyperOpts& o) {
  app->add_option("--gamma", o.gamma, "Dirichlet concentration on rank weights")->check(CLI::PositiveNumber);
  app->add_option("--nu", o.nu, "inverse-Wishart degrees of freedom (default q+2)");
  app->add_option("--alpha-lower", o.alpha_lower, "lower end of the alpha grid (default 1/p)");
  app->add_option("--alpha-upper", o.alpha_upper, "upper end of the alpha grid")->capture_default_str();
  app->add_option("--alpha-grid", o.alpha_grid, "alpha grid size")->check(CLI::Range(2, 100000))->capture_default_str();
}

void add_selection_options(CLI::App* app, SelectionOpts& o) {
  app->add_option("--sr-bar", o.sr_bar, "relevance share threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app->add_option("--p-bar", o.p_bar, "survival probability threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
}

SamplerConfig make_config(const SamplerOpts& o) {
  SamplerConfig c;
  c.parametrization = parse_parametrization(o.param);
  c.n_iter = o.iters;
  c.burn_in = o.burnin;
  c.thin = o.thin;
  c.seed = o.seed;
  c.validate();
  return c;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir + ": cannot create directory (" + ec.message() + ")");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw DataError(p.string() + ": cannot open for writing");
  return f;
}

// Tidy CSV of string cells.
void write_rows(const fs::path& path, const std::vector<std::string>& comments, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  auto f = open_out(path);
  write_comments(f, comments);
  for (std::size_t j = 0; j < header.size(); ++j) f << (j ? "," : "") << header[j];
  f << '\n';
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) f << (j ? "," : "") << r[j];
    f << '\n';
  }
  if (!f) throw DataError(path.string() + ": write failed");
}

std::string num(double x) { return format_double(x); }
std::string opt_num(const std::optional<double>& x) { return x ? format_double(*x) : "NA"; }

void write_json(const fs::path& path, const Json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

// Writes every selection / rank artifact for a set of draws.
void emit_posterior_outputs(const fs::path& out, const PosteriorDraws& draws, const Vector& norms, int q,
                            const SelectionOpts& sel, const std::vector<std::string>& comments, Json& report,
                            std::ostream& log, int chains) {
  // rank posterior and χ² uniformity
  const auto counts = rank_counts(draws.u_draws, q);
  const Vector post = rank_posterior(draws.u_draws, q);
  std::vector<std::vector<std::string>> rows;
  for (int s = 0; s < q; ++s) rows.push_back({std::to_string(s + 1), std::to_string(counts[s]), num(post[s])});
  write_rows(out / "rank_posterior.csv", comments, {"rank", "count", "probability"}, rows);

  const Chi2Result chi2 = chi2_uniformity(counts);
  write_rows(out / "chi2_uniformity.csv", comments, {"statistic", "df", "p_value"},
             {{num(chi2.statistic), std::to_string(chi2.df), num(chi2.p_value)}});

  rows.clear();
  const std::size_t per_chain = draws.size() / static_cast<std::size_t>(chains);
  for (std::size_t m = 0; m < draws.size(); ++m)
    rows.push_back({std::to_string(m / per_chain + 1), std::to_string(m % per_chain + 1), std::to_string(draws.u_draws[m])});
  write_rows(out / "u_trace.csv", comments, {"chain", "draw", "u"}, rows);

  // selection
  const SelectionReport rep = build_selection_report(draws.C_draws, norms, sel.sr_bar, sel.p_bar);
  const auto resp = numbered("response", q);
  write_csv((out / "c_hat.csv").string(), rep.C_hat, resp, comments);
  write_csv((out / "pip.csv").string(), rep.pip, resp, comments);
  write_csv((out / "zeta.csv").string(), rep.zeta, resp, comments);

  rows.clear();
  for (Eigen::Index j = 0; j < rep.pip.rows(); ++j)
    for (Eigen::Index k = 0; k < rep.pip.cols(); ++k)
      rows.push_back({std::to_string(j + 1), std::to_string(k + 1), num(rep.C_hat(j, k)), num(rep.pip(j, k)),
                      num(rep.zeta(j, k)), zeta_bucket(rep.zeta(j, k))});
  write_rows(out / "heatmap.csv", comments, {"covariate", "response", "c_hat", "pip", "zeta", "zeta_bucket"}, rows);

  rows.clear();
  for (Eigen::Index j = 0; j < rep.ri.rows(); ++j) {
    const Vector ri_row = rep.ri.row(j).transpose();
    const Vector surv = ri_survival(ri_row);
    for (Eigen::Index k = 0; k < rep.ri.cols(); ++k)
      rows.push_back({std::to_string(j + 1), num(ri_support(k, q)), num(ri_row[k]), num(surv[k])});
  }
  write_rows(out / "relevance_index.csv", comments, {"covariate", "support", "mass", "survival"}, rows);

  rows.clear();
  for (std::size_t j = 0; j < rep.ri_summary.size(); ++j) {
    const auto& s = rep.ri_summary[j];
    rows.push_back({std::to_string(j + 1), num(s.mode), num(s.mean), num(s.std), num(s.q25), num(s.q50), num(s.q75),
                    num(rep.verdicts[j].survival), to_string(rep.verdicts[j].verdict)});
  }
  write_rows(out / "ri_summary.csv", comments,
             {"covariate", "mode", "mean", "std", "q25", "q50", "q75", "survival", "verdict"}, rows);

  report["rank"] = {{"map", map_rank(draws.u_draws, q)}, {"posterior", to_json(post)}, {"chi2_uniformity", to_json(chi2)}};
  report["selection"] = to_json(rep);

  log << "retained draws: " << draws.size() << '\n';
  log << "MAP rank: " << map_rank(draws.u_draws, q) << '\n';
  print_rank_posterior(log, post);
  log << "chi-squared uniformity: statistic " << fixed(chi2.statistic, 4) << ", df " << chi2.df << ", p-value "
      << fixed(chi2.p_value, 4) << '\n';
  print_covariate_summary(log, rep);
}

// Writes to the log file and echoes to stdout.
struct Tee {
  std::ofstream file;
  std::ostringstream buf;
  void flush() {
    file << buf.str();
    std::cout << buf.str();
    buf.str("");
  }
};

std::vector<std::string> seed_comments(const SamplerConfig& cfg, int chains) {
  std::string seeds;
  for (int c = 0; c < chains; ++c)
    seeds += (c ? " " : "") + std::to_string(chains == 1 ? cfg.seed : derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
  return {"brecs seed=" + std::to_string(cfg.seed) + " chain_seeds=" + seeds + " param=" + to_string(cfg.parametrization) +
          " n_iter=" + std::to_string(cfg.n_iter) + " burn_in=" + std::to_string(cfg.burn_in) +
          " thin=" + std::to_string(cfg.thin)};
}

// ---------------------------------------------------------------------------
// subcommands

struct FitOpts {
  std::string y, x, out = "brecs_out";
  bool center = false, intercept = false;
  long subsample = 0;
  SamplerOpts s;
  HyperOpts h;
  SelectionOpts sel;
};

int run_fit(const FitOpts& o) {
  DatasetOptions dopt{o.center, o.intercept, o.subsample, derive_seed(o.s.seed, 0xDA7A)};
  const RegressionData data = load_dataset(o.y, o.x, dopt);
  const SamplerConfig cfg = make_config(o.s);
  const HyperParams hp = o.h.build(data.q(), data.p());
  ensure_dir(o.out);
  const fs::path out(o.out);
  Tee log{open_out(out / "run.log"), {}};
  log.buf << "data: " << o.y << " (Y), " << o.x << " (X); n=" << data.n() << " q=" << data.q() << " p=" << data.p()
          << (o.center ? " centered" : "") << (o.intercept ? " +intercept" : "") << '\n';
  if (o.subsample > 0) log.buf << "subsample: " << o.subsample << " rows, seed " << dopt.subsample_seed << '\n';
  const auto comments = seed_comments(cfg, o.s.chains);
  log.buf << comments.front() << '\n';
  log.flush();

  const PosteriorDraws draws = run_chains(data, hp, cfg, o.s.chains, o.s.jobs);

  Json report;
  report["data"] = {{"y", o.y}, {"x", o.x}, {"n", data.n()}, {"q", data.q()}, {"p", data.p()},
                    {"centered", o.center}, {"intercept", o.intercept}, {"subsample", o.subsample}};
  report["sampler"] = {{"parametrization", to_string(cfg.parametrization)}, {"n_iter", cfg.n_iter},
                       {"burn_in", cfg.burn_in}, {"thin", cfg.thin}, {"seed", cfg.seed}, {"chains", o.s.chains}};
  report["hyperparameters"] = {{"gamma", to_json(hp.gamma)}, {"nu", hp.nu}, {"alpha_lower", hp.alpha_lower},
                               {"alpha_upper", hp.alpha_upper}, {"alpha_grid_size", hp.alpha_grid_size}};
  Json seeds = Json::array();
  for (const auto& m : draws.meta) seeds.push_back(m.seed);
  report["chain_seeds"] = seeds;
  emit_posterior_outputs(out, draws, data.column_norms_sq(), static_cast<int>(data.q()), o.sel, comments, report,
                         log.buf, o.s.chains);
  write_draws((out / "draws.csv").string(), draws, data.column_norms_sq(), comments);
  write_json(out / "report.json", report);
  log.buf << "outputs written to " << o.out << '\n';
  log.flush();
  return 0;
}

struct SummarizeOpts {
  std::string draws, out = "brecs_summary";
  SelectionOpts sel;
};

int run_summarize(const SummarizeOpts& o) {
  const DrawsArchive a = read_draws(o.draws);
  ensure_dir(o.out);
  const fs::path out(o.out);
  Tee log{open_out(out / "run.log"), {}};
  log.buf << "draws: " << o.draws << '\n';
  const int q = static_cast<int>(a.draws.C_draws.front().cols());
  Json report;
  report["draws_file"] = o.draws;
  emit_posterior_outputs(out, a.draws, a.column_norms_sq, q, o.sel, {"brecs summarize of " + o.draws}, report, log.buf, 1);
  write_json(out / "report.json", report);
  log.flush();
  return 0;
}

struct DgpOpts {
  int n = 100, q = 5, p = 10, r0 = 3;
  std::string kind = "nonsparse";
  int p_star = 5;
  double z = 0.5;
  bool x_corr = false, e_corr = false;

  DgpSpec build(std::uint64_t seed) const {
    DgpSpec s;
    s.n = n;
    s.q = q;
    s.p = p;
    s.r0 = r0;
    s.kind = kind == "sparse" ? DgpKind::SparseRows : kind == "zeros" ? DgpKind::RandomZeros : DgpKind::NonSparse;
    s.p_star = p_star;
    s.z = z;
    s.x_corr = x_corr;
    s.e_corr = e_corr;
    s.seed = seed;
    s.validate();
    return s;
  }
};

struct SimulateOpts {
  DgpOpts d;
  std::uint64_t seed = 1;
  std::string out = "brecs_sim";
};

int run_simulate(const SimulateOpts& o) {
  const DgpSpec spec = o.d.build(o.seed);
  RngHandle rng(o.seed);
  const TruthBundle t = generate_truth(spec, rng);
  ensure_dir(o.out);
  const fs::path out(o.out);
  const std::vector<std::string> c = {"brecs simulate seed=" + std::to_string(o.seed) + " dgp=" + spec.label() +
                                      " n=" + std::to_string(spec.n) + " q=" + std::to_string(spec.q) +
                                      " p=" + std::to_string(spec.p) + " r0=" + std::to_string(spec.r0) +
                                      " x_corr=" + std::to_string(spec.x_corr) + " e_corr=" + std::to_string(spec.e_corr)};
  write_csv((out / "y.csv").string(), t.Y, numbered("y", spec.q), c);
  write_csv((out / "x.csv").string(), t.X, numbered("x", spec.p), c);
  write_csv((out / "c0.csv").string(), t.C0, numbered("response", spec.q), c);
  write_csv((out / "sigma0.csv").string(), t.Sigma0, numbered("response", spec.q), c);
  std::cout << "wrote y.csv, x.csv, c0.csv, sigma0.csv to " << o.out << '\n';
  return 0;
}

struct ReplicateOpts {
  std::string id;
  std::string scale = "desk";
  int reps = 0;  // 0 = scale default
  int iters = 7000, burnin = 2000;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out = "brecs_replicate";
};

struct Cell {
  DgpSpec spec;
  Parametrization param;
};

std::vector<std::string> summary_row(const std::string& id, const ExperimentSummary& e) {
  return {id, e.spec.label(), std::to_string(e.spec.n), std::to_string(e.spec.q), std::to_string(e.spec.p),
          std::to_string(e.spec.r0), e.spec.x_corr ? "corr" : "ind", e.spec.e_corr ? "corr" : "ind",
          to_string(e.sampler.parametrization), std::to_string(e.rows.size()), num(e.rank.mean), num(e.rank.sd),
          num(e.mse.mean), num(e.mse.sd), num(e.mcc.mean), num(e.mcc.sd),
          e.tpr.count ? num(e.tpr.mean) : "NA", e.fnr.count ? num(e.fnr.mean) : "NA"};
}

const std::vector<std::string> kSummaryHeader = {"id", "dgp", "n", "q", "p", "r0", "x", "errors", "param", "reps",
                                                 "rank_mean", "rank_sd", "mse_mean", "mse_sd", "mcc_mean", "mcc_sd",
                                                 "tpr_mean", "fnr_mean"};

int run_replicate(const ReplicateOpts& o) {
  const bool full = o.scale == "full";
  auto base = [](int n, int q, int p) {
    DgpSpec s;
    s.n = n;
    s.q = q;
    s.p = p;
    s.r0 = 3;
    return s;
  };
  std::vector<Cell> cells;
  int reps = 1;
  if (o.id == "fig2") {
    for (int n : {50, 100, 500}) cells.push_back({base(n, 5, 10), Parametrization::RRcs});
    reps = full ? 20 : 1;
  } else if (o.id == "fig3") {
    for (auto par : {Parametrization::RRn, Parametrization::RRcs}) {
      DgpSpec s = base(100, 5, 10);
      cells.push_back({s, par});
      s.kind = DgpKind::SparseRows;
      s.p_star = 5;
      cells.push_back({s, par});
      s.kind = DgpKind::RandomZeros;
      s.z = 0.5;
      cells.push_back({s, par});
    }
    reps = full ? 20 : 1;
  } else if (o.id == "table2") {
    for (auto par : {Parametrization::RRn, Parametrization::RRcs}) {
      cells.push_back({base(100, 5, 10), par});
      for (int ps : {2, 5, 8, 9}) {
        DgpSpec s = base(100, 5, 10);
        s.kind = DgpKind::SparseRows;
        s.p_star = ps;
        cells.push_back({s, par});
      }
      for (double z : {0.2, 0.5, 0.8, 0.9}) {
        DgpSpec s = base(100, 5, 10);
        s.kind = DgpKind::RandomZeros;
        s.z = z;
        cells.push_back({s, par});
      }
    }
    reps = full ? 20 : 3;
  } else if (o.id == "table3-cell") {
    DgpSpec s = base(50, 5, 15);
    s.kind = DgpKind::SparseRows;
    s.p_star = 5;
    cells.push_back({s, Parametrization::RRcs});
    if (full) cells.push_back({s, Parametrization::RRn});
    reps = full ? 20 : 10;
  } else {
    throw DomainError("unknown table id '" + o.id + "'");
  }
  if (o.reps > 0) reps = o.reps;

  ensure_dir(o.out);
  const fs::path out(o.out);
  Tee log{open_out(out / (o.id + "_run.log")), {}};
  const std::vector<std::string> comments = {"brecs replicate " + o.id + " scale=" + o.scale + " seed=" +
                                             std::to_string(o.seed) + " reps=" + std::to_string(reps) +
                                             " n_iter=" + std::to_string(o.iters) + " burn_in=" + std::to_string(o.burnin)};
  log.buf << comments.front() << '\n';
  log.flush();

  std::vector<std::vector<std::string>> summary, raw, mse_rows, rank_rows;
  Json all = Json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SamplerConfig cfg;
    cfg.parametrization = cells[c].param;
    cfg.n_iter = o.iters;
    cfg.burn_in = o.burnin;
    const std::uint64_t cell_seed = derive_seed(o.seed, c);
    const ExperimentSummary e = run_experiment(cells[c].spec, cfg, reps, cell_seed, o.jobs);
    summary.push_back(summary_row(o.id, e));
    all.push_back(to_json(e));
    for (const auto& r : e.rows) {
      raw.push_back({o.id, e.spec.label(), std::to_string(e.spec.n), to_string(cfg.parametrization),
                     std::to_string(r.replication + 1), std::to_string(r.data_seed), std::to_string(r.chain_seed),
                     std::to_string(r.metrics.rank_map), num(r.metrics.mse), num(r.metrics.cls.mcc),
                     opt_num(r.metrics.cls.tpr), opt_num(r.metrics.cls.fnr)});
      if (o.id == "fig2")
        for (Eigen::Index s = 0; s < r.metrics.rank_posterior.size(); ++s)
          rank_rows.push_back({std::to_string(e.spec.n), std::to_string(r.replication + 1), std::to_string(s + 1),
                               num(r.metrics.rank_posterior[s])});
    }
    if (o.id == "fig3") {
      const auto& r = e.rows.front();
      std::string tag = to_string(e.spec.kind);
      const std::string stem = "fig3_" + tag + "_" + to_string(cfg.parametrization);
      write_csv((out / (stem + "_c0.csv")).string(), r.C0, numbered("response", e.spec.q), comments);
      write_csv((out / (stem + "_c_hat.csv")).string(), r.C_hat, numbered("response", e.spec.q), comments);
      mse_rows.push_back({e.spec.label(), to_string(cfg.parametrization), num(r.metrics.mse), stem + "_c0.csv",
                          stem + "_c_hat.csv"});
    }
    log.buf << e.spec.label() << " n=" << e.spec.n << " (q,p)=(" << e.spec.q << "," << e.spec.p << ") "
            << to_string(cfg.parametrization) << ": rank " << fixed(e.rank.mean, 2) << ", MSE " << fixed(e.mse.mean, 4)
            << ", MCC " << fixed(e.mcc.mean, 2) << ", TPR " << (e.tpr.count ? fixed(e.tpr.mean, 2) : "NA") << ", FNR "
            << (e.fnr.count ? fixed(e.fnr.mean, 2) : "NA") << '\n';
    log.flush();
  }
  write_rows(out / (o.id + "_summary.csv"), comments, kSummaryHeader, summary);
  write_rows(out / (o.id + "_replications.csv"), comments,
             {"id", "dgp", "n", "param", "replication", "data_seed", "chain_seed", "rank_map", "mse", "mcc", "tpr", "fnr"},
             raw);
  if (o.id == "fig2")
    write_rows(out / "fig2_rank_posterior.csv", comments, {"n", "replication", "rank", "probability"}, rank_rows);
  if (o.id == "fig3")
    write_rows(out / "fig3_mse.csv", comments, {"dgp", "param", "mse", "c0_file", "c_hat_file"}, mse_rows);
  write_json(out / (o.id + ".json"), Json{{"id", o.id}, {"scale", o.scale}, {"seed", o.seed}, {"cells", all}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian rank estimation and covariate selection for reduced-rank regression"};
  app.set_config("--config", "", "INI/TOML file of option values; command-line flags take precedence");
  app.require_subcommand(1);

  FitOpts fit;
  auto* fit_cmd = app.add_subcommand("fit", "run the Gibbs sampler on CSV data and write reports");
  fit_cmd->add_option("--y", fit.y, "response CSV (n x q)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--x", fit.x, "covariate CSV (n x p)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_flag("--center", fit.center, "center the responses");
  fit_cmd->add_flag("--intercept", fit.intercept, "append a column of ones to X");
  fit_cmd->add_option("--subsample", fit.subsample, "use a random subset of this many rows")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--out", fit.out, "output directory")->capture_default_str();
  add_sampler_options(fit_cmd, fit.s);
  add_hyper_options(fit_cmd, fit.h);
  add_selection_options(fit_cmd, fit.sel);

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim_cmd->add_option("--n", sim.d.n, "observations")->capture_default_str();
  sim_cmd->add_option("--q", sim.d.q, "responses")->capture_default_str();
  sim_cmd->add_option("--p", sim.d.p, "covariates")->capture_default_str();
  sim_cmd->add_option("--r0", sim.d.r0, "true rank")->capture_default_str();
  sim_cmd->add_option("--dgp", sim.d.kind, "coefficient structure")
      ->check(CLI::IsMember({"nonsparse", "sparse", "zeros"}))
      ->capture_default_str();
  sim_cmd->add_option("--p-star", sim.d.p_star, "nonzero rows (sparse)")->capture_default_str();
  sim_cmd->add_option("--z", sim.d.z, "share of zero entries (zeros)")->capture_default_str();
  sim_cmd->add_flag("--x-corr", sim.d.x_corr, "compound-symmetric covariates");
  sim_cmd->add_flag("--e-corr", sim.d.e_corr, "compound-symmetric errors");
  sim_cmd->add_option("--seed", sim.seed, "seed")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "output directory")->capture_default_str();

  ReplicateOpts rep;
  auto* rep_cmd = app.add_subcommand("replicate", "rerun a simulation experiment");
  rep_cmd->add_option("id", rep.id, "experiment id")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "table2", "table3-cell"}));
  rep_cmd->add_option("--scale", rep.scale, "desk or full")->check(CLI::IsMember({"desk", "full"}))->capture_default_str();
  rep_cmd->add_option("--reps", rep.reps, "override the number of replications")->check(CLI::NonNegativeNumber);
  rep_cmd->add_option("--iters", rep.iters, "total iterations per chain")->check(CLI::PositiveNumber)->capture_default_str();
  rep_cmd->add_option("--burnin", rep.burnin, "burn-in iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
  rep_cmd->add_option("--seed", rep.seed, "master seed")->capture_default_str();
  rep_cmd->add_option("--jobs", rep.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "output directory")->capture_default_str();

  SummarizeOpts sum;
  auto* sum_cmd = app.add_subcommand("summarize", "recompute selection summaries from a draws file");
  sum_cmd->add_option("--draws", sum.draws, "draws.csv written by fit")->required()->check(CLI::ExistingFile);
  sum_cmd->add_option("--out", sum.out, "output directory")->capture_default_str();
  add_selection_options(sum_cmd, sum.sel);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*sim_cmd) return run_simulate(sim);
    if (*rep_cmd) return run_replicate(rep);
    if (*sum_cmd) return run_summarize(sum);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
