#pragma once

#include <cstdint>
#include <string>

#include "mcimplicit/ground_truth.hpp"
#include "mcimplicit/sampling.hpp"

namespace mcimplicit {

enum class InitScheme { gaussian, orthogonal, spectral };

InitScheme parse_init_scheme(const std::string& name);
std::string init_scheme_name(InitScheme scheme);

struct InitSpec {
  InitScheme scheme = InitScheme::gaussian;
  Eigen::Index r_prime = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

// Unit-operator-norm initialization direction Z (d x r_prime).
//   gaussian:   Z = G / ||G||
//   orthogonal: Z = Haar orthogonal, requires r_prime = d
//   spectral:   Z = U / ||U|| with U = V Sigma^{1/2} from the Frobenius-best
//               rank-r' approximation of R_Omega(X*); negative eigenvalues
//               are clamped to zero before the square root. Reads only the
//               observed entries of X* (x_star_observed = P_Omega(X*)).
Matrix init_direction(const InitSpec& spec, Eigen::Index d,
                      const ObservationSet* obs = nullptr,
                      const Matrix* x_star_observed = nullptr);

// sigma_r(V*^T Z) for unit-norm Z; in [0, 1].
double alignment_score(const Matrix& z, const OrthonormalBasis& v_star,
                       double unit_tol = default_tolerances().unit_norm_abs);

Matrix scale_init(const Matrix& z, double alpha);

// alpha = c_alpha * sigma_r / (kappa^{1.5} d), the exact-parameterization scale.
double theorem_alpha(double c_alpha, const GroundTruth& gt);

}  // namespace mcimplicit
