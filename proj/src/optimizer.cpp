#include "mcimplicit/optimizer.hpp"

#include <cmath>
#include <sstream>

namespace mcimplicit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Masked residual P_Omega(U U^T - X*) given precomputed U U^T.
Matrix masked_residual(const ObservationSet& obs, const Matrix& x_star_observed,
                       const Matrix& uut) {
  return apply_P_Omega(obs, uut) - x_star_observed;
}

// M = R_Omega(X* - U U^T), assembled from the masked residual only.
Matrix gd_direction(const ObservationSet& obs, const Matrix& masked_res) {
  return -(masked_res + masked_res.transpose()) / (2.0 * obs.p());
}

IterateState make_state(long t, Matrix u, const std::optional<OrthonormalBasis>& v) {
  IterateState st;
  st.t = t;
  st.u = std::move(u);
  if (v.has_value()) {
    Projection pr = project(*v, st.u);
    st.v = v;
    st.s = std::move(pr.onto);
    st.e = std::move(pr.complement);
  }
  return st;
}

struct RunDriver {
  const RunConfig& config;
  ObservedData observed;
  OracleData oracle;
  double x_star_fro;
  double eta;

  explicit RunDriver(const RunConfig& cfg) : config(cfg) {
    oracle.gt = &cfg.gt;
    oracle.x_star = materialize(cfg.gt);
    observed.obs = &cfg.obs;
    observed.x_star_observed = apply_P_Omega(cfg.obs, oracle.x_star);
    x_star_fro = oracle.x_star.norm();
    eta = step_size(cfg.gt, cfg.obs, cfg.eta_rule);
  }

  TraceRecord record(const IterateState& st, const Matrix& uut,
                     const Matrix& masked_res, const Matrix& m) const {
    TraceRecord r;
    r.t = st.t;
    r.loss = masked_res.squaredNorm() / (4.0 * config.obs.p());
    const Matrix delta = oracle.x_star - uut;
    r.err_fro = delta.norm();
    r.err_op = sym_operator_norm(delta);
    r.decoupling = sym_operator_norm(delta - m);
    r.m_norm = sym_operator_norm(m);
    r.grad_norm = (m * st.u).norm();  // gradient = -M U, same norm
    if (st.v.has_value()) {
      Eigen::BDCSVD<Matrix> s_svd(st.s);
      r.sig_max = s_svd.singularValues()(0);
      r.sig_min = s_svd.singularValues()(config.gt.r - 1);
      r.res_norm = operator_norm(st.e);
      const Matrix vdiff = st.v->matrix() - config.gt.basis.matrix();
      r.v_dist_op = operator_norm(vdiff);
      r.v_dist_fro = vdiff.norm();
      r.v_incoh = two_inf_norm(st.v->matrix());
      const Matrix lambda = uut - st.s * st.s.transpose();
      r.lambda_norm = sym_operator_norm(lambda);
    } else {
      r.sig_min = r.sig_max = r.res_norm = kNaN;
      r.v_dist_op = r.v_dist_fro = r.v_incoh = r.lambda_norm = kNaN;
    }
    return r;
  }

  RunResult loop(Matrix u0) {
    RunResult out;
    out.eta = eta;
    out.alpha = config.init.alpha;

    std::optional<OrthonormalBasis> v0;
    if (config.decomposition) v0 = config.gt.basis;  // V_0 = V*
    IterateState st = make_state(0, std::move(u0), v0);

    const double grad_stop_scale =
        sym_operator_norm(apply_R_Omega(config.obs, observed.x_star_observed));

    auto keep = [&](const IterateState& s) {
      if (!config.keep_iterates) return;
      out.us.push_back(s.u);
      if (s.v.has_value()) {
        out.vs.push_back(s.v->matrix());
        const Matrix vtu = s.v->matrix().transpose() * s.u;
        out.sigmas.push_back(vtu * vtu.transpose());
      }
    };

    while (true) {
      const Matrix uut = st.u * st.u.transpose();
      const Matrix masked_res =
          masked_residual(config.obs, observed.x_star_observed, uut);
      const Matrix m = gd_direction(config.obs, masked_res);
      keep(st);

      const double err_fro = (oracle.x_star - uut).norm();
      const double rel = err_fro / x_star_fro;
      const bool converged =
          config.gradient_stop
              ? (m * st.u).norm() <= 1e-12 * grad_stop_scale
              : (config.stop_tol > 0.0 && rel <= config.stop_tol);
      const bool diverged = rel > config.divergence_factor;
      const bool at_cap = st.t >= config.max_iters;
      const bool stopping = converged || diverged || at_cap;

      if (stopping || st.t % config.record_every == 0)
        out.trace.push_back(record(st, uut, masked_res, m));

      if (stopping) {
        out.status = diverged ? RunStatus::diverged
                              : (converged ? RunStatus::converged : RunStatus::max_iters);
        out.iterations = st.t;
        out.final_state = std::move(st);
        return out;
      }

      // Advance in place using the already-computed direction.
      Matrix u_next = st.u + eta * (m * st.u);
      std::optional<OrthonormalBasis> v_next;
      if (st.v.has_value()) {
        const Matrix z = st.v->matrix() + eta * (m * st.v->matrix());
        try {
          v_next = polar_orthonormalize(z);
        } catch (const SingularMatrixError& err) {
          std::ostringstream os;
          os << "run diverged at t = " << st.t + 1
             << ": dynamic basis became rank-deficient (" << err.what() << ")";
          throw DivergedError(os.str(), st.t + 1);
        }
      }
      st = make_state(st.t + 1, std::move(u_next), v_next);
    }
  }
};

}  // namespace

const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

double objective(const ObservationSet& obs, const Matrix& x_star_observed,
                 const Matrix& u) {
  if (u.rows() != obs.d())
    throw DimensionError("objective: factor row count mismatch");
  const Matrix res = masked_residual(obs, x_star_observed, u * u.transpose());
  return res.squaredNorm() / (4.0 * obs.p());
}

Matrix gradient(const ObservationSet& obs, const Matrix& x_star_observed,
                const Matrix& u) {
  if (u.rows() != obs.d())
    throw DimensionError("gradient: factor row count mismatch");
  const Matrix res = masked_residual(obs, x_star_observed, u * u.transpose());
  return (res + res.transpose()) / (2.0 * obs.p()) * u;
}

double step_size(const GroundTruth& gt, const ObservationSet& obs,
                 const EtaRule& rule) {
  double eta = 0.0;
  switch (rule.kind) {
    case EtaRule::Kind::explicit_value:
      eta = rule.value;
      break;
    case EtaRule::Kind::theorem:
      eta = rule.value * gt.mu * static_cast<double>(gt.r) /
            (std::sqrt(obs.p() * static_cast<double>(gt.d)) * gt.sigma1());
      break;
  }
  if (!(eta > 0.0)) throw DimensionError("step_size: nonpositive step size");
  return eta;
}

IterateState advance(const IterateState& state, const ObservationSet& obs,
                     const Matrix& x_star_observed, double eta) {
  const Matrix uut = state.u * state.u.transpose();
  const Matrix m = gd_direction(obs, masked_residual(obs, x_star_observed, uut));
  Matrix u_next = state.u + eta * (m * state.u);
  std::optional<OrthonormalBasis> v_next;
  if (state.v.has_value()) {
    const Matrix z = state.v->matrix() + eta * (m * state.v->matrix());
    try {
      v_next = polar_orthonormalize(z);
    } catch (const SingularMatrixError& err) {
      std::ostringstream os;
      os << "advance diverged at t = " << state.t + 1
         << ": dynamic basis became rank-deficient (" << err.what() << ")";
      throw DivergedError(os.str(), state.t + 1);
    }
  }
  return make_state(state.t + 1, std::move(u_next), v_next);
}

RunResult run(const RunConfig& config) {
  RunDriver driver(config);
  if (config.init.alpha == 0.0)  // degenerate scale: the origin is GD-fixed
    return driver.loop(Matrix::Zero(config.gt.d, config.init.r_prime));
  const bool spectral = config.init.scheme == InitScheme::spectral;
  const Matrix z =
      init_direction(config.init, config.gt.d, spectral ? &config.obs : nullptr,
                     spectral ? &driver.observed.x_star_observed : nullptr);
  return driver.loop(scale_init(z, config.init.alpha));
}

RunResult run_from(const RunConfig& config, Matrix u0) {
  RunDriver driver(config);
  if (u0.rows() != config.gt.d)
    throw DimensionError("run_from: factor row count mismatch");
  return driver.loop(std::move(u0));
}

}  // namespace mcimplicit
