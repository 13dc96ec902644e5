#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcimplicit/optimizer.hpp"

#include <json.hpp>

namespace mcimplicit {

// Declarative experiment description. p, r_prime, and alpha may be grids;
// a single run is the one-cell, one-seed special case. Unknown JSON fields
// are rejected (fail-closed) so experiment files stay auditable.
struct GtSpec {
  Eigen::Index d = 0, r = 0;
  double kappa = 1.0, sigma1 = 1.0;
  std::string style = "haar";
  std::optional<std::uint64_t> seed;  // derived from master seed when absent
};

struct SamplingSpec {
  std::vector<double> p_grid;
  std::optional<std::uint64_t> seed;
};

struct AlphaSpec {
  bool theorem_rule = false;   // alpha = c_alpha sigma_r / (kappa^1.5 d)
  double c_alpha = 0.1;
  std::vector<double> grid;    // used when !theorem_rule
};

struct InitConfig {
  std::string scheme = "gaussian";
  std::vector<Eigen::Index> r_prime_grid;
  AlphaSpec alpha;
  std::optional<std::uint64_t> seed;
};

struct OptimizerSpec {
  EtaRule eta;
  long max_iters = 1000;
  double stop_tol = 0.0;
  long record_every = 1;
};

struct LooSpec {
  Eigen::Index count = 0;  // 0 disables; negative means all d
  bool classical = false;
  bool weakly_coupled = true;
};

struct DiagnosticsSpec {
  bool decomposition = true;
  std::vector<std::string> checks;  // subset of {descent, onestep, helpers, drift}
  bool assert_checks = false;
  bool thm1_regime = false;
  double gamma1 = 1.0;
  double c_max = 100.0;
  double basin_constant = 1.0;
  LooSpec loo;
};

struct OutputSpec {
  std::string directory;  // empty: resolved from --out / MC_IMPLICIT_OUT / ./out
  bool csv = true;
  bool json = true;
  bool svg = false;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string name = "experiment";
  std::uint64_t master_seed = 0;
  GtSpec gt;
  SamplingSpec sampling;
  InitConfig init;
  OptimizerSpec optimizer;
  DiagnosticsSpec diagnostics;
  long n_seeds = 1;
  OutputSpec output;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json serialize_config(const ExperimentConfig& cfg);

// GroundTruth <-> JSON: {d, r, spectrum[], mu, kappa, basis(row-major), seed, style}.
nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

nlohmann::json observation_set_to_json(const ObservationSet& obs);
ObservationSet observation_set_from_json(const nlohmann::json& j);

}  // namespace mcimplicit
