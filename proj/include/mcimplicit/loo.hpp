#pragma once

#include <vector>

#include "mcimplicit/optimizer.hpp"

namespace mcimplicit {

enum class GhostKind { classical, weakly_coupled };
const char* ghost_kind_name(GhostKind k);

// A leave-one-out ghost trajectory. For classical ghosts `states` holds
// U_t^(l) (d x r'); for weakly-coupled ghosts it holds the orthonormal
// Vtilde_t^(l) (d x r). All per-t series share the main run's time axis.
struct LooGhost {
  Eigen::Index l = 0;
  GhostKind kind = GhostKind::classical;
  std::vector<Matrix> states;
  // classical: Procrustes dist(U_t, U_t^(l)); weakly: ||V_t - Vtilde_t^(l)||_F.
  std::vector<double> prox_err;
  // weakly: ||(V* - Vtilde_t^(l))_{l,.}||; classical: row-l error against U*
  // after Procrustes alignment (exact parameterization only, else NaN).
  std::vector<double> loo_row_err;
  // classical: dist(U_t^(l), U*) (exact parameterization only, else NaN);
  // weakly: dist(Vtilde_t^(l), V*).
  std::vector<double> dist_to_truth;
};

// Ghost driven by R_{Omega^(l)} from the same starting point U_0; requires the
// main result to carry its U_t stream (keep_iterates).
LooGhost run_classical_loo(const RunConfig& config, const RunResult& main,
                           Eigen::Index l);

// Weakly-coupled ghost: Vtilde_0 = V*, advanced by
//   Mtilde = R_{Omega^(l)}(X* - Vtilde Sigma_t Vtilde^T)
// where Sigma_t = V_t^T U_t U_t^T V_t is consumed from the main run's stream;
// that shared core matrix is the weak coupling.
LooGhost run_weakly_coupled_loo(const RunConfig& config, const RunResult& main,
                                Eigen::Index l);
// Variant taking an explicit Sigma_t stream (perturbation experiments).
LooGhost run_weakly_coupled_loo_with_sigmas(const RunConfig& config,
                                            const RunResult& main,
                                            const std::vector<Matrix>& sigmas,
                                            Eigen::Index l);

struct IncoherenceBudget {
  long t = 0;
  double loo_err = 0;   // max over covered l of ||(V* - Vtilde_t^(l))_{l,.}||
  double prox_err = 0;  // max over covered l of ||V_t - Vtilde_t^(l)||_F
  double base = 0;      // ||V*||_{2,inf}
  double bound = 0;     // loo_err + prox_err + base
  double actual = 0;    // max over covered l of ||(V_t)_{l,.}||
  bool loo_within_target = false;   // loo_err  <= sqrt(mu r / 4d)
  bool prox_within_target = false;  // prox_err <= sqrt(mu r / 4d)
};

// Three-term bound on ||V_t||_{2,inf}. When the ghosts cover every l the
// `actual` column is exactly ||V_t||_{2,inf}; with sampled l both sides of
// the triangle inequality are restricted to the covered rows.
IncoherenceBudget incoherence_budget(const RunConfig& config, const RunResult& main,
                                     const std::vector<LooGhost>& ghosts, long t);

struct BasinEntry {
  bool entered = false;
  double threshold = 0;
  double dist_to_truth = 0;       // dist(U_t, U*)
  double max_dist_to_ghosts = 0;  // max_l dist(U_t, U_t^(l))
  double max_ghost_to_truth = 0;  // max_l dist(U_t^(l), U*)
};

// Checks the basin-entry conditions against
// constant * sqrt(sigma_r mu^3 r^3 log(d) / (p d^2)). Exact parameterization only.
BasinEntry basin_entry_check(const Matrix& u_t, const std::vector<Matrix>& ghosts_at_t,
                             const GroundTruth& gt, const ObservationSet& obs,
                             double constant);

// Seeded uniform sample of `count` distinct leave-one-out indices.
std::vector<Eigen::Index> sample_loo_indices(Eigen::Index d, Eigen::Index count,
                                             std::uint64_t seed);

struct BasinDetection {
  bool fired = false;
  long t0 = -1;           // first iteration where all conditions held
  long t_final = 0;       // last iteration examined
  BasinEntry first_fire;  // margins at t0 (or at t_final when never fired)
};

// Advances main run and classical ghosts in lockstep, evaluating the
// basin-entry conditions at every step until they fire.
BasinDetection detect_basin_entry(const RunConfig& config,
                                  const std::vector<Eigen::Index>& ls,
                                  double constant);

}  // namespace mcimplicit
