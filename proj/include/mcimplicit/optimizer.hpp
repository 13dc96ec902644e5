#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "mcimplicit/ground_truth.hpp"
#include "mcimplicit/init.hpp"
#include "mcimplicit/sampling.hpp"

namespace mcimplicit {

// Capability handle for everything the U-update may touch: the mask and the
// observed entries P_Omega(X*). The dense ground truth (oracle) is kept on a
// separate handle so diagnostics can use it while the optimizer cannot.
struct ObservedData {
  const ObservationSet* obs = nullptr;
  Matrix x_star_observed;  // P_Omega(X*)
};

struct OracleData {
  const GroundTruth* gt = nullptr;
  Matrix x_star;  // dense X*
};

struct IterateState {
  long t = 0;
  Matrix u;  // d x r'
  // Dynamic-basis decomposition (rank r); absent when disabled or blind.
  std::optional<OrthonormalBasis> v;
  Matrix s;  // P_V U
  Matrix e;  // U - S
};

// One iteration's diagnostics. Fields that need the dynamic decomposition are
// NaN when it is disabled.
struct TraceRecord {
  long t = 0;
  double loss = 0, err_fro = 0, err_op = 0;
  double sig_min = 0, sig_max = 0, res_norm = 0;
  double v_dist_op = 0, v_dist_fro = 0, v_incoh = 0;
  double decoupling = 0, m_norm = 0, lambda_norm = 0;
  double grad_norm = 0;
};

inline constexpr const char* kTraceColumns[] = {
    "t",         "loss",       "err_fro", "err_op",     "sig_min",
    "sig_max",   "res_norm",   "v_dist_op", "v_dist_fro", "v_incoh",
    "decoupling", "m_norm",    "lambda_norm", "grad_norm"};

struct EtaRule {
  enum class Kind { explicit_value, theorem } kind = Kind::theorem;
  double value = 0.25;  // eta itself, or c_eta for the theorem rule
};

struct RunConfig {
  GroundTruth gt;
  ObservationSet obs;
  InitSpec init;
  EtaRule eta_rule;
  long max_iters = 1000;
  double stop_tol = 0.0;  // relative Frobenius error threshold; 0 disables
  long record_every = 1;
  bool decomposition = true;   // track the dynamic basis V_t and the S/E split
  bool keep_iterates = false;  // retain U_t, V_t, Sigma_t streams for loo/verify
  bool gradient_stop = false;  // stop on gradient stagnation instead of err_fro
  double divergence_factor = 1e3;
  ToleranceTable tol;
};

enum class RunStatus { converged, max_iters, diverged };
const char* run_status_name(RunStatus s);

struct RunResult {
  std::vector<TraceRecord> trace;
  IterateState final_state;
  RunStatus status = RunStatus::max_iters;
  long iterations = 0;  // t at exit
  double eta = 0, alpha = 0;
  // Present when keep_iterates: one entry per iteration 0..iterations.
  std::vector<Matrix> us;
  std::vector<Matrix> vs;
  std::vector<Matrix> sigmas;  // Sigma_t = V_t^T U_t U_t^T V_t
};

// f(U) = (1/4p) ||P_Omega(U U^T - X*)||_F^2; reads only observed entries.
double objective(const ObservationSet& obs, const Matrix& x_star_observed,
                 const Matrix& u);

// R_Omega(U U^T - X*) U; matches central finite differences of the objective.
Matrix gradient(const ObservationSet& obs, const Matrix& x_star_observed,
                const Matrix& u);

double step_size(const GroundTruth& gt, const ObservationSet& obs,
                 const EtaRule& rule);

// One GD step plus the dynamic-basis recursion:
//   U' = U + eta M U,  V' = polar((I + eta M) V),  M = R_Omega(X* - U U^T).
IterateState advance(const IterateState& state, const ObservationSet& obs,
                     const Matrix& x_star_observed, double eta);

RunResult run(const RunConfig& config);
// Same loop from an explicit starting factor (testing and basin diagnostics).
RunResult run_from(const RunConfig& config, Matrix u0);

}  // namespace mcimplicit
