#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mcimplicit/config.hpp"
#include "mcimplicit/loo.hpp"
#include "mcimplicit/verify.hpp"

namespace mcimplicit {

// One point of the (p, r_prime, alpha) x seed grid.
struct CellCoord {
  double p = 1.0;
  Eigen::Index r_prime = 1;
  double alpha = 0.0;        // resolved value; NaN until resolved for theorem rule
  bool alpha_theorem = false;
  long seed_index = 0;
};

std::vector<CellCoord> enumerate_cells(const ExperimentConfig& cfg);

// Resolves seeds from (master, label, coordinate values), generates the
// ground truth and mask, and assembles a RunConfig for one cell.
RunConfig make_run_config(const ExperimentConfig& cfg, const CellCoord& coord,
                          bool keep_iterates);

struct CellResult {
  CellCoord coord;
  double alpha = 0;
  double mu = 0;
  double eta = 0;
  double final_err_fro = 0;
  double final_rel_err = 0;
  long iterations = 0;
  RunStatus status = RunStatus::max_iters;
};

// Executes every cell x seed over a bounded worker pool; results come back
// indexed by cell order, independent of scheduling.
std::vector<CellResult> execute_sweep(const ExperimentConfig& cfg, int workers);

// Group medians/IQR per cell (over seeds); recomputable from the records.
struct CellAggregate {
  double p = 0;
  Eigen::Index r_prime = 0;
  double alpha = 0;
  long n = 0;
  double median_err = 0, q25_err = 0, q75_err = 0;
  double median_rel_err = 0;
  double median_iterations = 0;
};
std::vector<CellAggregate> aggregate_sweep(const std::vector<CellResult>& records);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

// Artifact IO ---------------------------------------------------------------

std::string trace_to_csv(const std::vector<TraceRecord>& trace);
std::string ghosts_to_csv(const std::vector<LooGhost>& ghosts);
std::string budgets_to_csv(const std::vector<IncoherenceBudget>& budgets);
std::string sweep_to_csv(const std::vector<CellResult>& records);
std::string aggregates_to_csv(const std::vector<CellAggregate>& aggs);
nlohmann::json checks_to_json(const std::vector<CheckReport>& reports);

nlohmann::json run_artifact_json(const ExperimentConfig& cfg, const RunConfig& rc,
                                 const RunResult& result);

struct LoadedArtifact {
  ExperimentConfig experiment;
  RunConfig run_config;  // rebuilt bit-exactly from the serialized gt and mask
  std::vector<TraceRecord> stored_trace;
  std::string status;
};
LoadedArtifact load_run_artifact(const std::string& path);

// CLI entry points ----------------------------------------------------------

struct CliOptions {
  std::string config_path;
  std::string artifact_path;
  std::string out_dir;        // --out; falls back to MC_IMPLICIT_OUT, then ./out
  long seed_override = -1;    // --seed; -1 means keep the config's master seed
  int workers = 0;            // 0: hardware concurrency
  bool assert_mode = false;
  std::string l_spec;         // cli_loo: "sample:8" or comma list
  std::vector<std::string> kinds;
};

int cli_run(const CliOptions& opt);
int cli_sweep(const CliOptions& opt);
int cli_verify(const CliOptions& opt);
int cli_loo(const CliOptions& opt);
int cli_concentration(const CliOptions& opt, Eigen::Index d, double p, Eigen::Index r,
                      int trials, std::uint64_t seed);

std::string resolve_out_dir(const std::string& flag_value);

}  // namespace mcimplicit
