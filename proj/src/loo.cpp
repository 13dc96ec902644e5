#include "mcimplicit/loo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcimplicit/rng.hpp"

namespace mcimplicit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_ghost_inputs(const RunConfig& config, const RunResult& main,
                          Eigen::Index l, bool need_sigmas) {
  if (l < 0 || l >= config.gt.d)
    throw DimensionError("leave-one-out index l out of range");
  if (main.us.empty())
    throw DimensionError("leave-one-out ghosts need the main run's factor stream "
                         "(run with keep_iterates)");
  if (need_sigmas && main.sigmas.size() != main.us.size())
    throw DimensionError(
        "weakly-coupled ghosts: missing Sigma_t entries (the main run must keep "
        "its full per-iteration stream)");
}

double basin_threshold(const GroundTruth& gt, const ObservationSet& obs,
                       double constant) {
  const double d = static_cast<double>(gt.d);
  const double r = static_cast<double>(gt.r);
  return constant * std::sqrt(gt.sigma_r() * std::pow(gt.mu, 3.0) * std::pow(r, 3.0) *
                              std::log(d) / (obs.p() * d * d));
}

}  // namespace

const char* ghost_kind_name(GhostKind k) {
  return k == GhostKind::classical ? "classical" : "weakly_coupled";
}

LooGhost run_classical_loo(const RunConfig& config, const RunResult& main,
                           Eigen::Index l) {
  require_ghost_inputs(config, main, l, false);
  const Matrix x_star = materialize(config.gt);
  const Matrix u_star = config.gt.u_star();
  const bool exact_param = config.init.r_prime == config.gt.r;
  const double eta = main.eta;

  LooGhost ghost;
  ghost.l = l;
  ghost.kind = GhostKind::classical;
  Matrix u = main.us.front();  // U_0^(l) = U_0
  const std::size_t steps = main.us.size();
  ghost.states.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) {
      const Matrix m = apply_R_Omega_loo(config.obs, l, x_star - u * u.transpose());
      u = u + eta * (m * u);
    }
    ghost.states.push_back(u);
    ghost.prox_err.push_back(procrustes_dist(main.us[t], u));
    if (exact_param) {
      ghost.dist_to_truth.push_back(procrustes_dist(u, u_star));
      // Row-l leave-one-out error after aligning the ghost onto U*.
      Eigen::BDCSVD<Matrix> svd(u.transpose() * u_star,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Matrix rot = svd.matrixU() * svd.matrixV().transpose();
      ghost.loo_row_err.push_back((u_star - u * rot).row(l).norm());
    } else {
      ghost.dist_to_truth.push_back(kNaN);
      ghost.loo_row_err.push_back(kNaN);
    }
  }
  return ghost;
}

LooGhost run_weakly_coupled_loo(const RunConfig& config, const RunResult& main,
                                Eigen::Index l) {
  return run_weakly_coupled_loo_with_sigmas(config, main, main.sigmas, l);
}

LooGhost run_weakly_coupled_loo_with_sigmas(const RunConfig& config,
                                            const RunResult& main,
                                            const std::vector<Matrix>& sigmas,
                                            Eigen::Index l) {
  require_ghost_inputs(config, main, l, true);
  if (sigmas.size() != main.us.size())
    throw DimensionError("weakly-coupled ghosts: Sigma_t stream length mismatch");
  if (main.vs.size() != main.us.size())
    throw DimensionError("weakly-coupled ghosts: missing V_t stream");
  const Matrix x_star = materialize(config.gt);
  const Matrix& v_star = config.gt.basis.matrix();
  const double eta = main.eta;

  LooGhost ghost;
  ghost.l = l;
  ghost.kind = GhostKind::weakly_coupled;
  OrthonormalBasis v(v_star);  // Vtilde_0^(l) = V*
  const std::size_t steps = main.us.size();
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) {
      const Matrix& vm = v.matrix();
      const Matrix m = apply_R_Omega_loo(
          config.obs, l, x_star - vm * sigmas[t - 1] * vm.transpose());
      v = polar_orthonormalize(vm + eta * (m * vm));
    }
    ghost.states.push_back(v.matrix());
    ghost.prox_err.push_back((main.vs[t] - v.matrix()).norm());
    ghost.loo_row_err.push_back((v_star - v.matrix()).row(l).norm());
    ghost.dist_to_truth.push_back(procrustes_dist(v.matrix(), v_star));
  }
  return ghost;
}

IncoherenceBudget incoherence_budget(const RunConfig& config, const RunResult& main,
                                     const std::vector<LooGhost>& ghosts, long t) {
  if (ghosts.empty()) throw DimensionError("incoherence_budget: no ghosts");
  const std::size_t ti = static_cast<std::size_t>(t);
  if (ti >= main.vs.size())
    throw DimensionError("incoherence_budget: t out of range of the V_t stream");
  IncoherenceBudget b;
  b.t = t;
  b.base = two_inf_norm(config.gt.basis.matrix());
  for (const LooGhost& g : ghosts) {
    if (g.kind != GhostKind::weakly_coupled)
      throw DimensionError("incoherence_budget: needs weakly-coupled ghosts");
    if (ti >= g.states.size())
      throw DimensionError("incoherence_budget: ghost trajectory too short");
    b.loo_err = std::max(b.loo_err, g.loo_row_err[ti]);
    b.prox_err = std::max(b.prox_err, g.prox_err[ti]);
    b.actual = std::max(b.actual, main.vs[ti].row(g.l).norm());
  }
  b.bound = b.loo_err + b.prox_err + b.base;
  const double target = std::sqrt(config.gt.mu * static_cast<double>(config.gt.r) /
                                  (4.0 * static_cast<double>(config.gt.d)));
  b.loo_within_target = b.loo_err <= target;
  b.prox_within_target = b.prox_err <= target;
  return b;
}

BasinEntry basin_entry_check(const Matrix& u_t, const std::vector<Matrix>& ghosts_at_t,
                             const GroundTruth& gt, const ObservationSet& obs,
                             double constant) {
  if (u_t.cols() != gt.r)
    throw DimensionError("basin_entry_check: requires exact parameterization r' = r");
  const Matrix u_star = gt.u_star();
  BasinEntry b;
  b.threshold = basin_threshold(gt, obs, constant);
  b.dist_to_truth = procrustes_dist(u_t, u_star);
  for (const Matrix& g : ghosts_at_t) {
    b.max_dist_to_ghosts = std::max(b.max_dist_to_ghosts, procrustes_dist(u_t, g));
    b.max_ghost_to_truth = std::max(b.max_ghost_to_truth, procrustes_dist(g, u_star));
  }
  b.entered = b.dist_to_truth <= b.threshold &&
              b.max_dist_to_ghosts <= b.threshold &&
              b.max_ghost_to_truth <= b.threshold;
  return b;
}

std::vector<Eigen::Index> sample_loo_indices(Eigen::Index d, Eigen::Index count,
                                             std::uint64_t seed) {
  count = std::min(count, d);
  RngStream rng(stream_key(seed, "loo_sample", {static_cast<std::uint64_t>(d)}));
  // Partial Fisher-Yates over 0..d-1.
  std::vector<Eigen::Index> all(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::Index j =
        i + static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(d - i));
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
  }
  std::vector<Eigen::Index> out(all.begin(), all.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

BasinDetection detect_basin_entry(const RunConfig& config,
                                  const std::vector<Eigen::Index>& ls,
                                  double constant) {
  if (config.init.r_prime != config.gt.r)
    throw DimensionError("detect_basin_entry: requires exact parameterization");
  RunConfig cfg = config;
  cfg.keep_iterates = false;
  cfg.decomposition = false;

  // Lockstep advance of the main iterate and its classical ghosts; memory
  // stays O(|ls|) instead of storing full trajectories.
  const Matrix x_star = materialize(cfg.gt);
  const Matrix x_obs = apply_P_Omega(cfg.obs, x_star);
  const double eta = step_size(cfg.gt, cfg.obs, cfg.eta_rule);
  const double x_fro = x_star.norm();

  const bool spectral = cfg.init.scheme == InitScheme::spectral;
  Matrix u = scale_init(
      init_direction(cfg.init, cfg.gt.d, spectral ? &cfg.obs : nullptr,
                     spectral ? &x_obs : nullptr),
      cfg.init.alpha);
  std::vector<Matrix> ghosts(ls.size(), u);

  BasinDetection det;
  for (long t = 0;; ++t) {
    det.t_final = t;
    const BasinEntry entry =
        basin_entry_check(u, ghosts, cfg.gt, cfg.obs, constant);
    if (entry.entered) {
      det.fired = true;
      det.t0 = t;
      det.first_fire = entry;
      return det;
    }
    det.first_fire = entry;
    const double rel = (x_star - u * u.transpose()).norm() / x_fro;
    if (t >= cfg.max_iters || (cfg.stop_tol > 0.0 && rel <= cfg.stop_tol) ||
        rel > cfg.divergence_factor)
      return det;

    const Matrix res = apply_P_Omega(cfg.obs, u * u.transpose()) - x_obs;
    const Matrix m = -(res + res.transpose()) / (2.0 * cfg.obs.p());
    u = u + eta * (m * u);
    for (std::size_t k = 0; k < ghosts.size(); ++k) {
      Matrix& g = ghosts[k];
      const Matrix mg =
          apply_R_Omega_loo(cfg.obs, ls[k], x_star - g * g.transpose());
      g = g + eta * (mg * g);
    }
  }
}

}  // namespace mcimplicit
