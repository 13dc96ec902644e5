#include "mcimplicit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "mcimplicit/csv.hpp"
#include "mcimplicit/rng.hpp"
#include "mcimplicit/svg.hpp"

namespace mcimplicit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> trace_columns() {
  return std::vector<std::string>(std::begin(kTraceColumns), std::end(kTraceColumns));
}

// Runs fn(i) for i in [0, n) over `workers` threads; the first exception wins.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int effective_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 2;
}

std::vector<CheckReport> run_configured_checks(const ExperimentConfig& cfg,
                                               const RunConfig& rc,
                                               const RunResult& result) {
  VerifyContext ctx;
  ctx.config = &rc;
  ctx.run = &result;
  ctx.options.gamma1 = cfg.diagnostics.gamma1;
  ctx.options.c_max = cfg.diagnostics.c_max;
  ctx.options.thm1_regime = cfg.diagnostics.thm1_regime;
  std::vector<CheckReport> all;
  auto append = [&all](std::vector<CheckReport> part) {
    all.insert(all.end(), part.begin(), part.end());
  };
  for (const std::string& name : cfg.diagnostics.checks) {
    if (name == "descent") append(check_descent(ctx));
    else if (name == "onestep") append(check_onestep(ctx));
    else if (name == "helpers") append(check_helper_bounds(ctx));
    else if (name == "drift") append(check_frobenius_drift(ctx));
  }
  return all;
}

std::vector<Eigen::Index> resolve_loo_indices(const ExperimentConfig& cfg,
                                              Eigen::Index d) {
  const Eigen::Index count = cfg.diagnostics.loo.count;
  if (count == 0) return {};
  if (count < 0) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  return sample_loo_indices(d, count, stream_key(cfg.master_seed, "loo_indices"));
}

struct GhostBundle {
  std::vector<LooGhost> ghosts;
  std::vector<IncoherenceBudget> budgets;  // weakly-coupled only
  bool budget_violated = false;
};

GhostBundle run_ghosts(const ExperimentConfig& cfg, const RunConfig& rc,
                       const RunResult& result, const std::vector<Eigen::Index>& ls,
                       bool classical, bool weakly, int workers) {
  GhostBundle bundle;
  std::vector<LooGhost> weakly_ghosts(weakly ? ls.size() : 0);
  std::vector<LooGhost> classical_ghosts(classical ? ls.size() : 0);
  parallel_for(ls.size(), workers, [&](std::size_t i) {
    if (weakly) weakly_ghosts[i] = run_weakly_coupled_loo(rc, result, ls[i]);
    if (classical) classical_ghosts[i] = run_classical_loo(rc, result, ls[i]);
  });
  if (weakly) {
    const double slack = rc.tol.budget_slack_abs;
    for (std::size_t t = 0; t < result.vs.size(); ++t) {
      IncoherenceBudget b =
          incoherence_budget(rc, result, weakly_ghosts, static_cast<long>(t));
      if (b.actual > b.bound + slack) bundle.budget_violated = true;
      bundle.budgets.push_back(b);
    }
  }
  for (auto& g : weakly_ghosts) bundle.ghosts.push_back(std::move(g));
  for (auto& g : classical_ghosts) bundle.ghosts.push_back(std::move(g));
  return bundle;
}

}  // namespace

std::vector<CellCoord> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<CellCoord> cells;
  const std::vector<double> alphas =
      cfg.init.alpha.theorem_rule ? std::vector<double>{kNaN} : cfg.init.alpha.grid;
  for (double p : cfg.sampling.p_grid)
    for (Eigen::Index rp : cfg.init.r_prime_grid)
      for (double a : alphas)
        for (long s = 0; s < cfg.n_seeds; ++s) {
          CellCoord c;
          c.p = p;
          c.r_prime = rp;
          c.alpha = a;
          c.alpha_theorem = cfg.init.alpha.theorem_rule;
          c.seed_index = s;
          cells.push_back(c);
        }
  return cells;
}

RunConfig make_run_config(const ExperimentConfig& cfg, const CellCoord& coord,
                          bool keep_iterates) {
  const std::uint64_t s = static_cast<std::uint64_t>(coord.seed_index);
  const std::uint64_t gt_seed =
      cfg.gt.seed ? *cfg.gt.seed : stream_key(cfg.master_seed, "gt", {s});
  const std::uint64_t mask_seed =
      cfg.sampling.seed ? *cfg.sampling.seed
                        : stream_key(cfg.master_seed, "mask_seed", {s, double_bits(coord.p)});
  const std::uint64_t init_seed =
      cfg.init.seed ? *cfg.init.seed
                    : stream_key(cfg.master_seed, "init_seed",
                                 {s, static_cast<std::uint64_t>(coord.r_prime)});

  GroundTruth gt = generate_ground_truth(cfg.gt.d, cfg.gt.r, cfg.gt.kappa,
                                         cfg.gt.sigma1, cfg.gt.style, gt_seed);
  if (below_regime_bound(gt))
    std::cerr << "warning: d = " << gt.d << " < 9 mu r = " << 9.0 * gt.mu * gt.r
              << "; outside the analyzed regime\n";
  ObservationSet obs = sample_mask(cfg.gt.d, coord.p, mask_seed);

  InitSpec init;
  init.scheme = parse_init_scheme(cfg.init.scheme);
  init.r_prime = coord.r_prime;
  init.alpha = coord.alpha_theorem ? theorem_alpha(cfg.init.alpha.c_alpha, gt)
                                   : coord.alpha;
  init.seed = init_seed;

  RunConfig rc{std::move(gt),
               std::move(obs),
               init,
               cfg.optimizer.eta,
               cfg.optimizer.max_iters,
               cfg.optimizer.stop_tol,
               cfg.optimizer.record_every,
               cfg.diagnostics.decomposition,
               keep_iterates};
  return rc;
}

std::vector<CellResult> execute_sweep(const ExperimentConfig& cfg, int workers) {
  const std::vector<CellCoord> cells = enumerate_cells(cfg);
  std::vector<CellResult> results(cells.size());
  parallel_for(cells.size(), effective_workers(workers), [&](std::size_t i) {
    const RunConfig rc = make_run_config(cfg, cells[i], false);
    const RunResult rr = run(rc);
    CellResult& out = results[i];
    out.coord = cells[i];
    out.alpha = rr.alpha;
    out.mu = rc.gt.mu;
    out.eta = rr.eta;
    out.final_err_fro = rr.trace.back().err_fro;
    out.final_rel_err = rr.trace.back().err_fro / materialize(rc.gt).norm();
    out.iterations = rr.iterations;
    out.status = rr.status;
  });
  return results;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - std::floor(pos);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<CellAggregate> aggregate_sweep(const std::vector<CellResult>& records) {
  // Group by (p, r_prime, alpha) preserving first-seen order.
  std::vector<CellAggregate> aggs;
  std::vector<std::vector<const CellResult*>> groups;
  for (const CellResult& r : records) {
    bool found = false;
    for (std::size_t i = 0; i < aggs.size(); ++i) {
      if (aggs[i].p == r.coord.p && aggs[i].r_prime == r.coord.r_prime &&
          ((std::isnan(aggs[i].alpha) && std::isnan(r.coord.alpha)) ||
           aggs[i].alpha == r.coord.alpha)) {
        groups[i].push_back(&r);
        found = true;
        break;
      }
    }
    if (!found) {
      CellAggregate a;
      a.p = r.coord.p;
      a.r_prime = r.coord.r_prime;
      a.alpha = r.coord.alpha;
      aggs.push_back(a);
      groups.push_back({&r});
    }
  }
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    std::vector<double> errs, rels, iters;
    for (const CellResult* r : groups[i]) {
      errs.push_back(r->final_err_fro);
      rels.push_back(r->final_rel_err);
      iters.push_back(static_cast<double>(r->iterations));
    }
    aggs[i].n = static_cast<long>(groups[i].size());
    aggs[i].median_err = median(errs);
    aggs[i].q25_err = quantile(errs, 0.25);
    aggs[i].q75_err = quantile(errs, 0.75);
    aggs[i].median_rel_err = median(rels);
    aggs[i].median_iterations = median(iters);
  }
  return aggs;
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  CsvWriter w(trace_columns());
  for (const TraceRecord& r : trace) {
    w.begin_row();
    w.add(r.t);
    w.add(r.loss);
    w.add(r.err_fro);
    w.add(r.err_op);
    w.add(r.sig_min);
    w.add(r.sig_max);
    w.add(r.res_norm);
    w.add(r.v_dist_op);
    w.add(r.v_dist_fro);
    w.add(r.v_incoh);
    w.add(r.decoupling);
    w.add(r.m_norm);
    w.add(r.lambda_norm);
    w.add(r.grad_norm);
    w.end_row();
  }
  return w.str();
}

std::string ghosts_to_csv(const std::vector<LooGhost>& ghosts) {
  CsvWriter w({"t", "l", "kind", "prox_err", "loo_row_err", "dist_to_truth"});
  for (const LooGhost& g : ghosts) {
    for (std::size_t t = 0; t < g.states.size(); ++t) {
      w.begin_row();
      w.add(static_cast<long>(t));
      w.add(static_cast<long>(g.l));
      w.add(std::string(ghost_kind_name(g.kind)));
      w.add(g.prox_err[t]);
      w.add(g.loo_row_err[t]);
      w.add(g.dist_to_truth[t]);
      w.end_row();
    }
  }
  return w.str();
}

std::string budgets_to_csv(const std::vector<IncoherenceBudget>& budgets) {
  CsvWriter w({"t", "loo_err", "prox_err", "base", "bound", "actual",
               "loo_within_target", "prox_within_target"});
  for (const IncoherenceBudget& b : budgets) {
    w.begin_row();
    w.add(b.t);
    w.add(b.loo_err);
    w.add(b.prox_err);
    w.add(b.base);
    w.add(b.bound);
    w.add(b.actual);
    w.add(static_cast<long>(b.loo_within_target ? 1 : 0));
    w.add(static_cast<long>(b.prox_within_target ? 1 : 0));
    w.end_row();
  }
  return w.str();
}

std::string sweep_to_csv(const std::vector<CellResult>& records) {
  CsvWriter w({"p", "r_prime", "alpha", "seed_index", "mu", "eta", "final_err_fro",
               "final_rel_err", "iterations", "status"});
  for (const CellResult& r : records) {
    w.begin_row();
    w.add(r.coord.p);
    w.add(static_cast<long>(r.coord.r_prime));
    w.add(r.alpha);
    w.add(r.coord.seed_index);
    w.add(r.mu);
    w.add(r.eta);
    w.add(r.final_err_fro);
    w.add(r.final_rel_err);
    w.add(r.iterations);
    w.add(std::string(run_status_name(r.status)));
    w.end_row();
  }
  return w.str();
}

std::string aggregates_to_csv(const std::vector<CellAggregate>& aggs) {
  CsvWriter w({"p", "r_prime", "alpha", "n", "median_err", "q25_err", "q75_err",
               "median_rel_err", "median_iterations"});
  for (const CellAggregate& a : aggs) {
    w.begin_row();
    w.add(a.p);
    w.add(static_cast<long>(a.r_prime));
    w.add(a.alpha);
    w.add(a.n);
    w.add(a.median_err);
    w.add(a.q25_err);
    w.add(a.q75_err);
    w.add(a.median_rel_err);
    w.add(a.median_iterations);
    w.end_row();
  }
  return w.str();
}

json checks_to_json(const std::vector<CheckReport>& reports) {
  json arr = json::array();
  for (const CheckReport& r : reports) {
    json e{{"check", r.check_name},
           {"t_first", r.t_first},
           {"t_last", r.t_last},
           {"applicable", r.n_applicable},
           {"violations", r.n_violations},
           {"tier", r.explicit_constant ? "assert" : "measure"}};
    if (std::isnan(r.worst_margin)) e["worst_margin"] = nullptr;
    else e["worst_margin"] = r.worst_margin;
    if (std::isnan(r.empirical_constant)) e["empirical_constant"] = nullptr;
    else e["empirical_constant"] = r.empirical_constant;
    arr.push_back(e);
  }
  return arr;
}

json run_artifact_json(const ExperimentConfig& cfg, const RunConfig& rc,
                       const RunResult& result) {
  json resolved{{"ground_truth", ground_truth_to_json(rc.gt)},
                {"mask", observation_set_to_json(rc.obs)},
                {"init", json{{"scheme", init_scheme_name(rc.init.scheme)},
                              {"r_prime", rc.init.r_prime},
                              {"alpha", rc.init.alpha},
                              {"seed", rc.init.seed}}},
                {"eta", result.eta},
                {"max_iters", rc.max_iters},
                {"stop_tol", rc.stop_tol},
                {"record_every", rc.record_every},
                {"decomposition", rc.decomposition}};

  json rows = json::array();
  for (const TraceRecord& r : result.trace) {
    json row = json::array();
    row.push_back(r.t);
    auto push = [&row](double v) {
      if (std::isnan(v)) row.push_back(nullptr);
      else row.push_back(v);
    };
    push(r.loss); push(r.err_fro); push(r.err_op); push(r.sig_min);
    push(r.sig_max); push(r.res_norm); push(r.v_dist_op); push(r.v_dist_fro);
    push(r.v_incoh); push(r.decoupling); push(r.m_norm); push(r.lambda_norm);
    push(r.grad_norm);
    rows.push_back(row);
  }

  const TraceRecord& last = result.trace.back();
  const double x_fro = materialize(rc.gt).norm();
  json summary{{"iterations", result.iterations},
               {"status", run_status_name(result.status)},
               {"final_err_fro", last.err_fro},
               {"final_rel_err", last.err_fro / x_fro},
               {"final_loss", last.loss},
               {"eta", result.eta},
               {"alpha", result.alpha},
               {"mu", rc.gt.mu}};

  return json{{"schema_version", 1},
              {"kind", "mc_implicit_run"},
              {"config", serialize_config(cfg)},
              {"resolved", resolved},
              {"trace", json{{"columns", trace_columns()}, {"rows", rows}}},
              {"final_summary", summary},
              {"status", run_status_name(result.status)}};
}

LoadedArtifact load_run_artifact(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("artifact", "cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("artifact", std::string("invalid JSON: ") + e.what());
  }
  for (const char* key : {"config", "resolved", "trace", "final_summary", "status"})
    if (!j.contains(key))
      throw ConfigError(std::string("artifact.") + key, "missing required field");

  ExperimentConfig experiment = parse_config(j.at("config"));
  std::string status = j.at("status").get<std::string>();

  const json& res = j.at("resolved");
  for (const char* key : {"ground_truth", "mask", "init", "eta", "max_iters",
                          "stop_tol", "record_every", "decomposition"})
    if (!res.contains(key))
      throw ConfigError(std::string("artifact.resolved.") + key,
                        "missing required field");

  GroundTruth gt = ground_truth_from_json(res.at("ground_truth"));
  ObservationSet obs = observation_set_from_json(res.at("mask"));
  InitSpec init;
  const json& ij = res.at("init");
  init.scheme = parse_init_scheme(ij.at("scheme").get<std::string>());
  init.r_prime = ij.at("r_prime").get<Eigen::Index>();
  init.alpha = ij.at("alpha").get<double>();
  init.seed = ij.at("seed").get<std::uint64_t>();

  RunConfig run_config{std::move(gt),
                       std::move(obs),
                       init,
                       experiment.optimizer.eta,
                       res.at("max_iters").get<long>(),
                       res.at("stop_tol").get<double>(),
                       res.at("record_every").get<long>(),
                       res.at("decomposition").get<bool>(),
                       true};

  const json& trace = j.at("trace");
  if (!trace.contains("columns") || !trace.contains("rows"))
    throw ConfigError("artifact.trace", "missing columns/rows");
  const auto cols = trace.at("columns").get<std::vector<std::string>>();
  const auto expected = trace_columns();
  for (const std::string& want : expected)
    if (std::find(cols.begin(), cols.end(), want) == cols.end())
      throw ConfigError("artifact.trace.columns", "missing column '" + want + "'");
  std::vector<TraceRecord> stored;
  for (const json& row : trace.at("rows")) {
    if (row.size() != expected.size())
      throw ConfigError("artifact.trace.rows", "row has wrong field count");
    TraceRecord r;
    auto num = [&row](std::size_t i) {
      return row[i].is_null() ? kNaN : row[i].get<double>();
    };
    r.t = row[0].get<long>();
    r.loss = num(1); r.err_fro = num(2); r.err_op = num(3); r.sig_min = num(4);
    r.sig_max = num(5); r.res_norm = num(6); r.v_dist_op = num(7);
    r.v_dist_fro = num(8); r.v_incoh = num(9); r.decoupling = num(10);
    r.m_norm = num(11); r.lambda_norm = num(12); r.grad_norm = num(13);
    stored.push_back(r);
  }
  if (stored.empty()) throw ConfigError("artifact.trace.rows", "empty trace");
  return LoadedArtifact{std::move(experiment), std::move(run_config),
                        std::move(stored), std::move(status)};
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("MC_IMPLICIT_OUT"); env && *env) return env;
  return "out";
}

namespace {

ExperimentConfig load_with_overrides(const CliOptions& opt) {
  ExperimentConfig cfg = load_config(opt.config_path);
  if (opt.seed_override >= 0)
    cfg.master_seed = static_cast<std::uint64_t>(opt.seed_override);
  return cfg;
}

fs::path prepare_dir(const ExperimentConfig& cfg, const CliOptions& opt) {
  std::string root = !opt.out_dir.empty()
                         ? opt.out_dir
                         : (!cfg.output.directory.empty() ? cfg.output.directory
                                                          : resolve_out_dir(""));
  fs::path dir = fs::path(root) / cfg.name;
  fs::create_directories(dir);
  return dir;
}

}  // namespace

int cli_run(const CliOptions& opt) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  const std::vector<CellCoord> cells = enumerate_cells(cfg);
  if (cells.size() != 1)
    throw ConfigError("config",
                      "run expects a single cell and one seed; use the sweep "
                      "command for grids");
  const bool want_checks = !cfg.diagnostics.checks.empty();
  const bool want_loo = cfg.diagnostics.loo.count != 0;
  const RunConfig rc = make_run_config(cfg, cells[0], want_checks || want_loo);
  const RunResult result = run(rc);
  const fs::path dir = prepare_dir(cfg, opt);

  if (cfg.output.csv) write_text(dir / "trace.csv", trace_to_csv(result.trace));
  if (cfg.output.json)
    write_text(dir / "run.json", run_artifact_json(cfg, rc, result).dump(2) + "\n");

  bool check_failure = false;
  if (want_checks) {
    const std::vector<CheckReport> reports = run_configured_checks(cfg, rc, result);
    std::cout << format_check_table(reports);
    write_text(dir / "checks.json", checks_to_json(reports).dump(2) + "\n");
    if ((opt.assert_mode || cfg.diagnostics.assert_checks) &&
        any_explicit_violation(reports))
      check_failure = true;
  }

  if (want_loo) {
    const std::vector<Eigen::Index> ls = resolve_loo_indices(cfg, rc.gt.d);
    const GhostBundle bundle =
        run_ghosts(cfg, rc, result, ls, cfg.diagnostics.loo.classical,
                   cfg.diagnostics.loo.weakly_coupled, effective_workers(opt.workers));
    if (cfg.output.csv) {
      write_text(dir / "loo.csv", ghosts_to_csv(bundle.ghosts));
      if (!bundle.budgets.empty())
        write_text(dir / "budget.csv", budgets_to_csv(bundle.budgets));
    }
    if (bundle.budget_violated) check_failure = true;
  }

  std::cout << "run " << cfg.name << ": status=" << run_status_name(result.status)
            << " iterations=" << result.iterations
            << " final_err_fro=" << result.trace.back().err_fro << "\n";
  if (result.status == RunStatus::diverged) return 2;
  return check_failure ? 3 : 0;
}

int cli_sweep(const CliOptions& opt) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  const std::vector<CellResult> records =
      execute_sweep(cfg, effective_workers(opt.workers));
  const std::vector<CellAggregate> aggs = aggregate_sweep(records);
  const fs::path dir = prepare_dir(cfg, opt);
  write_text(dir / "sweep.csv", sweep_to_csv(records));
  write_text(dir / "sweep_agg.csv", aggregates_to_csv(aggs));

  if (cfg.output.svg) {
    const bool alpha_axis = !cfg.init.alpha.theorem_rule && cfg.init.alpha.grid.size() > 1;
    const bool p_axis = cfg.sampling.p_grid.size() > 1;
    if (alpha_axis || p_axis) {
      SvgLineChart chart;
      chart.title = cfg.name;
      chart.x_label = alpha_axis ? "alpha" : "p";
      chart.y_label = "median final error";
      chart.log_x = alpha_axis;
      chart.log_y = true;
      for (Eigen::Index rp : cfg.init.r_prime_grid) {
        SvgSeries series;
        series.name = "r' = " + std::to_string(rp);
        for (const CellAggregate& a : aggs) {
          if (a.r_prime != rp) continue;
          series.x.push_back(alpha_axis ? a.alpha : a.p);
          series.y.push_back(a.median_err);
        }
        chart.series.push_back(std::move(series));
      }
      chart.write_file((dir / "sweep.svg").string());
    }
  }

  long diverged = 0;
  for (const CellResult& r : records)
    if (r.status == RunStatus::diverged) ++diverged;
  std::cout << "sweep " << cfg.name << ": " << records.size() << " runs, "
            << diverged << " diverged; records in " << (dir / "sweep.csv") << "\n";
  return diverged > 0 ? 2 : 0;
}

int cli_verify(const CliOptions& opt) {
  LoadedArtifact art = load_run_artifact(opt.artifact_path);
  art.run_config.keep_iterates = true;
  const RunResult replay = run(art.run_config);
  if (replay.trace.size() != art.stored_trace.size())
    throw ConfigError("artifact.trace",
                      "stored trace length does not match the deterministic replay");

  ExperimentConfig cfg = art.experiment;
  if (cfg.diagnostics.checks.empty())
    cfg.diagnostics.checks = {"descent", "onestep", "helpers", "drift"};
  const std::vector<CheckReport> reports =
      run_configured_checks(cfg, art.run_config, replay);
  std::cout << format_check_table(reports);

  const fs::path dir = prepare_dir(cfg, opt);
  write_text(dir / "checks.json", checks_to_json(reports).dump(2) + "\n");
  if (opt.assert_mode && any_explicit_violation(reports)) return 3;
  return 0;
}

int cli_loo(const CliOptions& opt) {
  LoadedArtifact art = load_run_artifact(opt.artifact_path);
  art.run_config.keep_iterates = true;
  const RunResult replay = run(art.run_config);

  ExperimentConfig cfg = art.experiment;
  std::vector<Eigen::Index> ls;
  if (opt.l_spec.rfind("sample:", 0) == 0) {
    const Eigen::Index k = std::stol(opt.l_spec.substr(7));
    ls = sample_loo_indices(art.run_config.gt.d, k,
                            stream_key(cfg.master_seed, "loo_indices"));
  } else if (!opt.l_spec.empty()) {
    std::size_t pos = 0;
    while (pos < opt.l_spec.size()) {
      std::size_t next = opt.l_spec.find(',', pos);
      if (next == std::string::npos) next = opt.l_spec.size();
      ls.push_back(std::stol(opt.l_spec.substr(pos, next - pos)));
      pos = next + 1;
    }
  } else {
    ls = resolve_loo_indices(cfg, art.run_config.gt.d);
    if (ls.empty())
      ls = sample_loo_indices(art.run_config.gt.d, 8,
                              stream_key(cfg.master_seed, "loo_indices"));
  }

  bool classical = false, weakly = false;
  if (opt.kinds.empty()) {
    classical = cfg.diagnostics.loo.classical;
    weakly = cfg.diagnostics.loo.weakly_coupled;
    if (!classical && !weakly) weakly = true;
  } else {
    for (const std::string& k : opt.kinds) {
      if (k == "classical") classical = true;
      else if (k == "weakly_coupled") weakly = true;
      else throw ConfigError("kinds", "unknown ghost kind '" + k + "'");
    }
  }

  const GhostBundle bundle = run_ghosts(cfg, art.run_config, replay, ls, classical,
                                        weakly, effective_workers(opt.workers));
  const fs::path dir = prepare_dir(cfg, opt);
  write_text(dir / "loo.csv", ghosts_to_csv(bundle.ghosts));
  if (!bundle.budgets.empty()) {
    write_text(dir / "budget.csv", budgets_to_csv(bundle.budgets));
    double max_prox = 0;
    for (const IncoherenceBudget& b : bundle.budgets)
      max_prox = std::max(max_prox, b.prox_err);
    const double target = std::sqrt(art.run_config.gt.mu * art.run_config.gt.r /
                                    (4.0 * art.run_config.gt.d));
    std::cout << "loo: max prox_err = " << max_prox << " vs sqrt(mu r / 4d) = "
              << target << (max_prox <= target ? " (within)" : " (exceeded)") << "\n";
  }
  // The triangle inequality is pure algebra; a violation signals a bug.
  return bundle.budget_violated ? 4 : 0;
}

int cli_concentration(const CliOptions& opt, Eigen::Index d, double p, Eigen::Index r,
                      int trials, std::uint64_t seed) {
  const std::vector<CheckReport> reports =
      estimate_concentration_constants(d, p, r, trials, seed);
  std::cout << format_check_table(reports);
  if (!opt.out_dir.empty()) {
    fs::path dir(resolve_out_dir(opt.out_dir));
    fs::create_directories(dir);
    write_text(dir / "concentration.json", checks_to_json(reports).dump(2) + "\n");
  }
  return any_explicit_violation(reports) ? 3 : 0;
}

}  // namespace mcimplicit
