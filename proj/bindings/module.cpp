#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcimplicit/config.hpp"
#include "mcimplicit/harness.hpp"
#include "mcimplicit/loo.hpp"

namespace py = pybind11;
using namespace mcimplicit;

namespace {

py::dict gt_to_dict(const GroundTruth& gt) {
  py::dict d;
  d["d"] = gt.d;
  d["r"] = gt.r;
  d["basis"] = gt.basis.matrix();
  d["spectrum"] = Vector(gt.spectrum);
  d["mu"] = gt.mu;
  d["kappa"] = gt.kappa;
  d["seed"] = gt.seed;
  d["style"] = gt.style;
  return d;
}

py::dict trace_record_to_dict(const TraceRecord& r) {
  py::dict d;
  d["t"] = r.t;
  d["loss"] = r.loss;
  d["err_fro"] = r.err_fro;
  d["err_op"] = r.err_op;
  d["sig_min"] = r.sig_min;
  d["sig_max"] = r.sig_max;
  d["res_norm"] = r.res_norm;
  d["v_dist_op"] = r.v_dist_op;
  d["v_dist_fro"] = r.v_dist_fro;
  d["v_incoh"] = r.v_incoh;
  d["decoupling"] = r.decoupling;
  d["m_norm"] = r.m_norm;
  d["lambda_norm"] = r.lambda_norm;
  d["grad_norm"] = r.grad_norm;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mcimplicit, m) {
  m.doc() = "Gradient descent with small initialization for symmetric low-rank "
            "matrix completion";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError",
                                              PyExc_RuntimeError);

  m.def("matrix_norms", [](const Matrix& x) {
    const MatrixNorms n = matrix_norms(x);
    py::dict d;
    d["op"] = n.op;
    d["fro"] = n.fro;
    d["two_inf"] = n.two_inf;
    d["max"] = n.max;
    return d;
  });
  m.def("polar_orthonormalize",
        [](const Matrix& z) { return polar_orthonormalize(z).matrix(); });
  m.def("project", [](const Matrix& v, const Matrix& u) {
    const Projection p = project(OrthonormalBasis(v), u);
    return py::make_tuple(p.onto, p.complement);
  });
  m.def("procrustes_dist", &procrustes_dist);
  m.def("partial_eig_sym", [](const Matrix& a, Eigen::Index k) {
    const EigPairs e = partial_eig_sym(a, k);
    return py::make_tuple(e.values, e.vectors.matrix());
  });

  m.def("generate_ground_truth",
        [](Eigen::Index d, Eigen::Index r, double kappa, double sigma1,
           const std::string& style, std::uint64_t seed) {
          return gt_to_dict(generate_ground_truth(d, r, kappa, sigma1, style, seed));
        },
        py::arg("d"), py::arg("r"), py::arg("kappa") = 2.0, py::arg("sigma1") = 1.0,
        py::arg("style") = "haar", py::arg("seed") = 0);
  m.def("measure_incoherence",
        [](const Matrix& v) { return measure_incoherence(OrthonormalBasis(v)); });
  m.def("materialize", [](const Matrix& basis, const Vector& spectrum) {
    const Matrix x = basis * spectrum.asDiagonal() * basis.transpose();
    return (0.5 * (x + x.transpose())).eval();
  });

  m.def("sample_mask", [](Eigen::Index d, double p, std::uint64_t seed) {
    return sample_mask(d, p, seed).mask().cast<int>().eval();
  });
  m.def("apply_R_omega", [](const Eigen::MatrixXi& mask, double p, const Matrix& x) {
    ObservationSet obs(mask.rows(), p, 0, mask.cast<std::uint8_t>());
    return apply_R_Omega(obs, x);
  });
  m.def("apply_R_omega_loo",
        [](const Eigen::MatrixXi& mask, double p, Eigen::Index l, const Matrix& x) {
          ObservationSet obs(mask.rows(), p, 0, mask.cast<std::uint8_t>());
          return apply_R_Omega_loo(obs, l, x);
        });
  m.def("omega_deviation", [](const Eigen::MatrixXi& mask, double p) {
    return omega_deviation(ObservationSet(mask.rows(), p, 0, mask.cast<std::uint8_t>()));
  });

  m.def("alignment_score", [](const Matrix& z, const Matrix& v_star) {
    return alignment_score(z, OrthonormalBasis(v_star));
  });
  m.def("objective", [](const Eigen::MatrixXi& mask, double p, const Matrix& x_obs,
                        const Matrix& u) {
    ObservationSet obs(mask.rows(), p, 0, mask.cast<std::uint8_t>());
    return objective(obs, x_obs, u);
  });
  m.def("gradient", [](const Eigen::MatrixXi& mask, double p, const Matrix& x_obs,
                       const Matrix& u) {
    ObservationSet obs(mask.rows(), p, 0, mask.cast<std::uint8_t>());
    return gradient(obs, x_obs, u);
  });

  m.def("run_experiment", [](const std::string& config_json) {
    const ExperimentConfig cfg = parse_config(nlohmann::json::parse(config_json));
    const std::vector<CellCoord> cells = enumerate_cells(cfg);
    if (cells.size() != 1)
      throw DimensionError("run_experiment expects a single-cell config");
    const RunConfig rc = make_run_config(cfg, cells[0], false);
    const RunResult rr = run(rc);
    py::list trace;
    for (const TraceRecord& r : rr.trace) trace.append(trace_record_to_dict(r));
    py::dict out;
    out["status"] = run_status_name(rr.status);
    out["iterations"] = rr.iterations;
    out["eta"] = rr.eta;
    out["alpha"] = rr.alpha;
    out["mu"] = rc.gt.mu;
    out["final_u"] = rr.final_state.u;
    out["trace"] = trace;
    return out;
  });
}
