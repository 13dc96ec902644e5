#include "mcimplicit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mcimplicit/rng.hpp"

namespace mcimplicit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Accumulates one named inequality "value <= bound" (or a measured ratio).
struct CheckAccum {
  CheckReport report;
  bool first = true;

  explicit CheckAccum(std::string name, bool explicit_constant) {
    report.check_name = std::move(name);
    report.explicit_constant = explicit_constant;
    report.worst_margin = kInf;
    report.empirical_constant = kNaN;
  }

  void span(long t) {
    if (first) {
      report.t_first = report.t_last = t;
      first = false;
    } else {
      report.t_first = std::min(report.t_first, t);
      report.t_last = std::max(report.t_last, t);
    }
  }

  // Asserted inequality: margin = bound - value, violation when negative.
  void assert_le(long t, double value, double bound) {
    span(t);
    ++report.n_applicable;
    const double margin = bound - value;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < 0.0) ++report.n_violations;
  }

  // Measured hidden constant: keep the max.
  void measure(long t, double constant) {
    span(t);
    ++report.n_applicable;
    if (std::isnan(report.empirical_constant) || constant > report.empirical_constant)
      report.empirical_constant = constant;
  }

  CheckReport take() {
    if (std::isinf(report.worst_margin)) report.worst_margin = kNaN;
    return report;
  }
};

struct RegimeNumbers {
  double sigma1, sigma_r, mu, kappa, p, eta, alpha;
  double d, r;
  double log_inv_alpha;
  double sqrt_sigma1, sqrt_sigma_r;
  double v_incoh_bound;   // 2 sqrt(mu r / d)
  double e_small;         // sqrt(sigma1 / d)
  double e_lambda;        // sqrt(sigma1 mu r / (81 d))
  double e_helper_u;      // sqrt(sigma1 mu r / d)
  double gamma1_unit;     // kappa mu r^{1.5} log(1/alpha) / sqrt(pd)
};

RegimeNumbers regime(const VerifyContext& ctx) {
  const GroundTruth& gt = ctx.config->gt;
  RegimeNumbers n;
  n.sigma1 = gt.sigma1();
  n.sigma_r = gt.sigma_r();
  n.mu = gt.mu;
  n.kappa = gt.kappa;
  n.p = ctx.config->obs.p();
  n.eta = ctx.run->eta;
  n.alpha = ctx.run->alpha;
  n.d = static_cast<double>(gt.d);
  n.r = static_cast<double>(gt.r);
  n.log_inv_alpha = n.alpha > 0.0 ? std::log(1.0 / n.alpha) : 1.0;
  n.sqrt_sigma1 = std::sqrt(n.sigma1);
  n.sqrt_sigma_r = std::sqrt(n.sigma_r);
  n.v_incoh_bound = 2.0 * std::sqrt(n.mu * n.r / n.d);
  n.e_small = std::sqrt(n.sigma1 / n.d);
  n.e_lambda = std::sqrt(n.sigma1 * n.mu * n.r / (81.0 * n.d));
  n.e_helper_u = std::sqrt(n.sigma1 * n.mu * n.r / n.d);
  n.gamma1_unit =
      n.kappa * n.mu * std::pow(n.r, 1.5) * n.log_inv_alpha / std::sqrt(n.p * n.d);
  return n;
}

bool has_decomposition(const TraceRecord& r) { return !std::isnan(r.sig_max); }

// Preconditions of the one-step dynamics proposition, evaluated from a trace
// row: ||S|| <= 2 sqrt(sigma1), ||E|| <= sqrt(sigma1/d),
// ||V||_{2,inf} <= 2 sqrt(mu r / d), ||V - V*||_F <= gamma1 * unit.
bool onestep_preconditions(const TraceRecord& row, const RegimeNumbers& n,
                           double gamma1) {
  return has_decomposition(row) && row.sig_max <= 2.0 * n.sqrt_sigma1 &&
         row.res_norm <= n.e_small && row.v_incoh <= n.v_incoh_bound &&
         row.v_dist_fro <= gamma1 * n.gamma1_unit;
}

void require_streams(const VerifyContext& ctx, const char* who) {
  if (ctx.run->us.empty() || ctx.run->vs.empty())
    throw DimensionError(std::string(who) +
                         ": needs the run's factor streams (keep_iterates)");
  if (ctx.config->record_every != 1)
    throw DimensionError(std::string(who) + ": needs record_every = 1");
}

}  // namespace

std::vector<CheckReport> check_descent(const VerifyContext& ctx) {
  require_streams(ctx, "check_descent");
  const RegimeNumbers n = regime(ctx);
  const Matrix x_star = materialize(ctx.config->gt);
  const Matrix x_obs = apply_P_Omega(ctx.config->obs, x_star);
  const std::vector<TraceRecord>& trace = ctx.run->trace;

  CheckAccum descent("descent_lemma", false);
  CheckAccum descent_cap("descent_lemma_capped", false);
  CheckAccum vupdate("v_update_first_order", false);

  const std::size_t steps = ctx.run->us.size();
  for (std::size_t t = 0; t < steps; ++t) {
    const TraceRecord& row = trace[t];
    const Matrix& u = ctx.run->us[t];
    const Matrix uut = u * u.transpose();
    const Matrix delta = x_star - uut;
    const Matrix res = apply_P_Omega(ctx.config->obs, uut) - x_obs;
    const Matrix m = -(res + res.transpose()) / (2.0 * n.p);

    // First-order polar expansion: V_{t+1} ~ (I + eta Pperp M) V_t.
    if (t + 1 < steps) {
      const Matrix& v = ctx.run->vs[t];
      const Matrix mv = m * v;
      const Matrix predicted = v + n.eta * (mv - v * (v.transpose() * mv));
      const double resid = operator_norm(ctx.run->vs[t + 1] - predicted);
      if (row.m_norm > 0.0)
        vupdate.measure(row.t, resid / (n.eta * n.eta * row.m_norm * row.m_norm));
    }

    // Descent lemma preconditions.
    if (!has_decomposition(row)) continue;
    if (!(row.sig_min >= 0.5 * n.sqrt_sigma_r && row.sig_max <= 2.0 * n.sqrt_sigma1 &&
          row.v_dist_op <= 0.1))
      continue;

    const Matrix w = m * u;
    const double lhs = (delta * u).cwiseProduct(w).sum();
    const double rhs0 = n.sigma_r / 15.0 * row.err_fro * row.err_fro;
    const double slack =
        (std::sqrt(std::pow(n.sigma_r, 3.0) * n.mu * n.r * n.r / n.p) * row.res_norm +
         std::sqrt(n.r) * n.sigma1 * row.decoupling) *
        row.err_fro;
    double c_min;
    if (slack > 0.0)
      c_min = std::max(0.0, (rhs0 - lhs) / slack);
    else
      c_min = lhs >= rhs0 ? 0.0 : kInf;
    descent.measure(row.t, c_min);
    descent_cap.assert_le(row.t, rhs0 - ctx.options.c_max * slack, lhs);
  }
  return {descent.take(), descent_cap.take(), vupdate.take()};
}

std::vector<CheckReport> check_onestep(const VerifyContext& ctx) {
  if (ctx.config->record_every != 1)
    throw DimensionError("check_onestep: needs record_every = 1");
  const std::vector<TraceRecord>& trace = ctx.run->trace;
  if (trace.size() < 2) throw DimensionError("check_onestep: trace too short");
  const RegimeNumbers n = regime(ctx);
  const double g1 = ctx.options.gamma1;

  CheckAccum min_signal("onestep_min_signal", false);
  CheckAccum max_signal("onestep_max_signal", true);
  CheckAccum residual("onestep_residual", false);
  CheckAccum growth("residual_growth_rate", false);
  CheckAccum error_dyn("onestep_error", false);
  CheckAccum persistence("sigmin_persistence", true);

  // Persistence is a trajectory property independent of the one-step
  // preconditions: once sigma_r(S_t) first clears sqrt(sigma_r)/2, it stays.
  bool reached_t1 = false;
  for (const TraceRecord& row : trace) {
    if (!has_decomposition(row)) continue;
    if (!reached_t1 && row.sig_min >= 0.5 * n.sqrt_sigma_r) reached_t1 = true;
    if (reached_t1) persistence.assert_le(row.t, 0.5 * n.sqrt_sigma_r, row.sig_min);
  }

  for (std::size_t t = 0; t + 1 < trace.size(); ++t) {
    const TraceRecord& cur = trace[t];
    const TraceRecord& next = trace[t + 1];
    if (!onestep_preconditions(cur, n, g1)) continue;

    const double slack_unit = n.eta * n.sigma1 * n.gamma1_unit * cur.res_norm;

    // Minimal signal dynamic.
    {
      const double rhs0 = (1.0 + 0.8 * n.eta * n.sigma_r -
                           n.eta * cur.sig_min * cur.sig_min) *
                          cur.sig_min;
      double c;
      if (slack_unit > 0.0)
        c = std::max(0.0, (rhs0 - next.sig_min) / slack_unit);
      else
        c = next.sig_min >= rhs0 ? 0.0 : kInf;
      min_signal.measure(cur.t, c);
    }

    // Maximal signal dynamic (explicit constant).
    max_signal.assert_le(cur.t, next.sig_max, 2.0 * n.sqrt_sigma1);

    // Residual dynamic.
    if (cur.res_norm > 0.0) {
      const double ratio = next.res_norm / cur.res_norm;
      residual.measure(cur.t,
                       std::max(0.0, (ratio - 1.0) / (n.eta * n.sigma1 * n.gamma1_unit)));
      growth.measure(cur.t, std::max(0.0, (ratio - 1.0) / n.eta));
    }

    // Error dynamic, additionally requiring sigma_r(S_t) >= sqrt(sigma_r)/2.
    if (cur.sig_min >= 0.5 * n.sqrt_sigma_r) {
      const double contracted = (1.0 - 0.1 * n.eta * n.sigma_r) * cur.err_fro;
      const double unit =
          n.eta * std::sqrt(std::pow(n.sigma1, 3.0) * n.mu * n.r * n.r / n.p) *
          cur.res_norm;
      if (unit > 0.0) {
        error_dyn.measure(cur.t, std::max(0.0, (next.err_fro - contracted) / unit));
      } else {
        error_dyn.span(cur.t);
        ++error_dyn.report.n_applicable;
        if (next.err_fro > contracted) ++error_dyn.report.n_violations;
      }
    }
  }
  return {min_signal.take(), max_signal.take(),  residual.take(),
          growth.take(),     error_dyn.take(),   persistence.take()};
}

std::vector<CheckReport> check_helper_bounds(const VerifyContext& ctx) {
  const RegimeNumbers n = regime(ctx);
  const double g1 = ctx.options.gamma1;
  const std::vector<TraceRecord>& trace = ctx.run->trace;

  CheckAccum uut_fro("helper_uut_fro", true);          // ||U U^T||_F <= 8 sqrt(r) sigma1
  CheckAccum lambda_op("helper_lambda", true);         // ||Lambda|| <= 5 sqrt(sigma1) ||E||
  CheckAccum lambda_tri("lambda_triangle", true);      // <= 2||S||||E|| + ||E||^2
  CheckAccum delta_op("helper_delta", true);           // ||Delta|| <= 5 sigma1
  CheckAccum m_op("helper_m", true);                   // ||M|| <= 6 sigma1
  CheckAccum ir_gamma("gamma_ir_delta", false);        // 21 Gamma sigma1 sqrt(mu^2 r^2 / pd)
  CheckAccum rl_gamma("gamma_r_lambda", false);        // 10 Gamma sqrt(sigma1 mu r / p) ||E||
  CheckAccum irl_gamma("gamma_ir_lambda", false);      // 9 Gamma sqrt(sigma1 mu r / p) ||E||

  const bool have_streams =
      !ctx.run->us.empty() && ctx.config->record_every == 1;

  for (std::size_t t = 0; t < trace.size(); ++t) {
    const TraceRecord& row = trace[t];
    if (!has_decomposition(row)) continue;
    const bool s_ok = row.sig_max <= 2.0 * n.sqrt_sigma1;
    const bool v_ok = row.v_incoh <= n.v_incoh_bound;
    const bool vdist_ok = row.v_dist_op <= g1 * n.gamma1_unit;

    // Always-assertable algebra, no preconditions.
    lambda_tri.assert_le(row.t, row.lambda_norm,
                         2.0 * row.sig_max * row.res_norm +
                             row.res_norm * row.res_norm +
                             1e-12 * n.sigma1);

    if (s_ok && row.res_norm <= n.e_helper_u && have_streams) {
      const Matrix gram = ctx.run->us[t].transpose() * ctx.run->us[t];
      uut_fro.assert_le(row.t, gram.norm(), 8.0 * std::sqrt(n.r) * n.sigma1);
    }

    if (s_ok && row.res_norm <= n.e_lambda) {
      lambda_op.assert_le(row.t, row.lambda_norm,
                          5.0 * n.sqrt_sigma1 * row.res_norm);
      if (v_ok && vdist_ok) {
        delta_op.assert_le(row.t, row.err_op, 5.0 * n.sigma1);
        m_op.assert_le(row.t, row.m_norm, 6.0 * n.sigma1);
        ir_gamma.measure(row.t, row.decoupling /
                                    (21.0 * n.sigma1 *
                                     std::sqrt(n.mu * n.mu * n.r * n.r / (n.p * n.d))));
      }
      if (v_ok && ctx.options.measure_gamma && have_streams &&
          row.res_norm > 0.0) {
        const Matrix& u = ctx.run->us[t];
        const Matrix& v = ctx.run->vs[t];
        const Matrix s = v * (v.transpose() * u);
        const Matrix lambda = u * u.transpose() - s * s.transpose();
        const Matrix r_lambda = apply_R_Omega(ctx.config->obs, lambda);
        const double unit = std::sqrt(n.sigma1 * n.mu * n.r / n.p) * row.res_norm;
        rl_gamma.measure(row.t, sym_operator_norm(r_lambda) / (10.0 * unit));
        irl_gamma.measure(row.t, sym_operator_norm(lambda - r_lambda) / (9.0 * unit));
      }
    }
  }
  return {uut_fro.take(), lambda_op.take(), lambda_tri.take(), delta_op.take(),
          m_op.take(),    ir_gamma.take(),  rl_gamma.take(),   irl_gamma.take()};
}

std::vector<CheckReport> check_frobenius_drift(const VerifyContext& ctx) {
  const std::vector<TraceRecord>& trace = ctx.run->trace;
  const RegimeNumbers n = regime(ctx);
  const double base = two_inf_norm(ctx.config->gt.basis.matrix());

  CheckAccum step("v_drift_step", false);
  CheckAccum cumulative("v_drift_cumulative", ctx.options.thm1_regime);

  for (std::size_t t = 0; t < trace.size(); ++t) {
    const TraceRecord& row = trace[t];
    if (!has_decomposition(row)) continue;
    cumulative.assert_le(row.t, row.v_dist_fro, 1.0 / (2.0 * n.kappa));
    if (t + 1 >= trace.size()) continue;
    const TraceRecord& next = trace[t + 1];
    if (!(row.sig_max <= 2.0 * n.sqrt_sigma1 && row.v_dist_op <= 1.0 / (2.0 * n.kappa)))
      continue;
    const double increment = next.v_dist_fro - row.v_dist_fro;
    const double budget = n.eta * n.sigma1 * std::sqrt(n.d * n.r / n.p) *
                          (base * base + row.v_incoh * row.v_incoh);
    if (budget > 0.0) step.measure(row.t, std::max(0.0, increment / budget));
  }
  auto cum_report = cumulative.take();
  // Record how much of the 1/(2 kappa) budget the drift consumed.
  double worst = 0.0;
  for (const TraceRecord& row : trace)
    if (has_decomposition(row)) worst = std::max(worst, row.v_dist_fro);
  cum_report.empirical_constant = worst * 2.0 * n.kappa;
  return {step.take(), cum_report};
}

std::vector<CheckReport> run_all_checks(const VerifyContext& ctx) {
  std::vector<CheckReport> all;
  for (auto&& part : {check_descent(ctx), check_onestep(ctx),
                      check_helper_bounds(ctx), check_frobenius_drift(ctx)})
    all.insert(all.end(), part.begin(), part.end());
  return all;
}

std::vector<CheckReport> estimate_concentration_constants(Eigen::Index d, double p,
                                                          Eigen::Index r, int trials,
                                                          std::uint64_t seed) {
  if (trials < 1) throw DimensionError("estimate_concentration_constants: trials >= 1");
  const double dd = static_cast<double>(d);
  const double rr = static_cast<double>(r);
  const double sqrt_dp = std::sqrt(dd / p);

  CheckAccum mask_dev("conc_mask_deviation", false);
  CheckAccum loo_dom("conc_loo_dominated", true);
  CheckAccum inner("conc_inner_product", false);
  CheckAccum fro_indep("conc_fro_diff_independent", false);
  CheckAccum fro_general("conc_fro_diff_general", false);

  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t tseed =
        stream_key(seed, "concentration", {static_cast<std::uint64_t>(trial)});
    const ObservationSet obs = sample_mask(d, p, tseed);
    RngStream rng(stream_key(tseed, "concentration_draws"));

    // Mask deviation and its leave-one-out domination.
    const Matrix mask = obs.mask().cast<double>();
    const Matrix dev =
        (mask + mask.transpose()) / (2.0 * p) - Matrix::Ones(d, d);
    const double dev_norm = sym_operator_norm(dev);
    mask_dev.measure(trial, dev_norm / sqrt_dp);
    for (Eigen::Index l = 0; l < d; ++l) {
      Matrix dev_l = dev;
      dev_l.row(l).setZero();
      dev_l.col(l).setZero();
      loo_dom.assert_le(trial, sym_operator_norm(dev_l), dev_norm + 1e-12);
    }

    // Inner-product concentration on symmetric low-rank arguments (A A^T
    // against B B^T); vanishes identically at p = 1.
    {
      const Matrix a = gaussian_matrix(d, r, rng);
      const Matrix b = gaussian_matrix(d, r, rng);
      const Matrix aat = a * a.transpose();
      const Matrix lhs_mat = aat - apply_R_Omega(obs, aat);
      const double lhs = std::abs(lhs_mat.cwiseProduct(b * b.transpose()).sum());
      const double denom =
          sqrt_dp * two_inf_norm(a) * b.norm() * a.norm() * two_inf_norm(b);
      inner.measure(trial, denom > 0.0 ? lhs / denom : 0.0);
    }

    // ||(R_Omega - R_Omega^(l))(X) V||_F^2, independent case: X symmetric
    // low-rank and V orthonormal, both independent of the mask.
    {
      RngStream vrng(stream_key(tseed, "concentration_basis"));
      const Matrix v = haar_frame(d, r, vrng);
      Vector diag(r);
      for (Eigen::Index i = 0; i < r; ++i) diag(i) = 2.0 * vrng.next_uniform() - 1.0;
      const Matrix x = v * diag.asDiagonal() * v.transpose();
      const Eigen::Index l = static_cast<Eigen::Index>(trial) % d;
      const Matrix diff = apply_R_Omega(obs, x) - apply_R_Omega_loo(obs, l, x);
      const double lhs2 = (diff * v).squaredNorm();
      const double mu_v = dd / rr * two_inf_norm(v) * two_inf_norm(v);
      const double delta = 1.0 / (dd * dd * dd);
      const double unit = mu_v * rr * std::log(4.0 * rr / delta) / p *
                          x.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff();
      fro_indep.measure(trial, unit > 0.0 ? lhs2 / unit : 0.0);

      // General case: arbitrary X and V.
      const Matrix xg = gaussian_matrix(d, d, rng);
      const Matrix vg = gaussian_matrix(d, r, rng);
      const Matrix diff_g = apply_R_Omega(obs, xg) - apply_R_Omega_loo(obs, l, xg);
      const double lhs2_g = (diff_g * vg).squaredNorm();
      const double unit_g = dd / p * xg.cwiseAbs().maxCoeff() *
                            xg.cwiseAbs().maxCoeff() * vg.squaredNorm();
      fro_general.measure(trial, unit_g > 0.0 ? lhs2_g / unit_g : 0.0);
    }
  }
  return {mask_dev.take(), loo_dom.take(), inner.take(), fro_indep.take(),
          fro_general.take()};
}

std::string format_check_table(const std::vector<CheckReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "check" << std::right << std::setw(10)
     << "t_range" << std::setw(12) << "applicable" << std::setw(11) << "violations"
     << std::setw(14) << "worst_margin" << std::setw(14) << "constant"
     << std::setw(10) << "tier" << '\n';
  for (const CheckReport& r : reports) {
    std::ostringstream range;
    range << r.t_first << ".." << r.t_last;
    os << std::left << std::setw(28) << r.check_name << std::right << std::setw(10)
       << range.str() << std::setw(12) << r.n_applicable << std::setw(11)
       << r.n_violations << std::setw(14) << std::setprecision(4) << std::scientific
       << r.worst_margin << std::setw(14) << r.empirical_constant << std::setw(10)
       << (r.explicit_constant ? "assert" : "measure") << '\n';
  }
  return os.str();
}

bool any_explicit_violation(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (r.explicit_constant && r.n_violations > 0) return true;
  return false;
}

}  // namespace mcimplicit
