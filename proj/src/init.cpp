#include "mcimplicit/init.hpp"

#include <cmath>
#include <sstream>

#include "mcimplicit/rng.hpp"

namespace mcimplicit {

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "gaussian") return InitScheme::gaussian;
  if (name == "orthogonal") return InitScheme::orthogonal;
  if (name == "spectral") return InitScheme::spectral;
  throw DimensionError("unknown init scheme '" + name + "'");
}

std::string init_scheme_name(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::gaussian: return "gaussian";
    case InitScheme::orthogonal: return "orthogonal";
    case InitScheme::spectral: return "spectral";
  }
  return "?";
}

Matrix init_direction(const InitSpec& spec, Eigen::Index d,
                      const ObservationSet* obs, const Matrix* x_star_observed) {
  if (spec.r_prime < 1 || spec.r_prime > d)
    throw DimensionError("init_direction: need 1 <= r_prime <= d");
  RngStream rng(stream_key(spec.seed, "init",
                           {static_cast<std::uint64_t>(d),
                            static_cast<std::uint64_t>(spec.r_prime)}));
  switch (spec.scheme) {
    case InitScheme::gaussian: {
      const Matrix g = gaussian_matrix(d, spec.r_prime, rng);
      return g / operator_norm(g);
    }
    case InitScheme::orthogonal: {
      if (spec.r_prime != d)
        throw DimensionError("init_direction: orthogonal scheme requires r_prime = d");
      return haar_frame(d, d, rng);
    }
    case InitScheme::spectral: {
      if (obs == nullptr || x_star_observed == nullptr)
        throw DimensionError(
            "init_direction: spectral scheme needs the mask and observed entries");
      const Matrix r_omega = apply_R_Omega(*obs, *x_star_observed);
      EigPairs top = partial_eig_sym(r_omega, spec.r_prime);
      Vector clamped = top.values.cwiseMax(0.0);
      if (clamped.maxCoeff() <= 0.0)
        throw SingularMatrixError(
            "init_direction: spectral initialization degenerate, all eigenvalues "
            "clamp to zero",
            0.0);
      const Matrix u = top.vectors.matrix() * clamped.cwiseSqrt().asDiagonal();
      // ||U|| = sqrt(lambda_max) by construction, but compute it generically.
      return u / operator_norm(u);
    }
  }
  throw DimensionError("init_direction: unreachable");
}

double alignment_score(const Matrix& z, const OrthonormalBasis& v_star,
                       double unit_tol) {
  if (z.rows() != v_star.rows())
    throw DimensionError("alignment_score: row mismatch");
  const double znorm = operator_norm(z);
  if (std::abs(znorm - 1.0) > unit_tol) {
    std::ostringstream os;
    os << "alignment_score: ||Z|| = " << znorm << ", expected 1";
    throw DimensionError(os.str());
  }
  // sigma_r(P_{V*} Z) = sigma_r(V*^T Z) since V* has orthonormal columns.
  if (z.cols() < v_star.cols()) return 0.0;  // rank < r forces sigma_r = 0
  Eigen::BDCSVD<Matrix> svd(v_star.matrix().transpose() * z);
  return svd.singularValues()(v_star.cols() - 1);
}

Matrix scale_init(const Matrix& z, double alpha) {
  if (!(alpha > 0.0)) throw DimensionError("scale_init: alpha must be > 0");
  return alpha * z;
}

double theorem_alpha(double c_alpha, const GroundTruth& gt) {
  return c_alpha * gt.sigma_r() /
         (std::pow(gt.kappa, 1.5) * static_cast<double>(gt.d));
}

}  // namespace mcimplicit
