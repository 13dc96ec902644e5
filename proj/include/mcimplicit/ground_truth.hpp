#pragma once

#include <cstdint>
#include <string>

#include "mcimplicit/matops.hpp"

namespace mcimplicit {

// Planted rank-r PSD ground truth X* = V* diag(spectrum) V*^T. Incoherence
// mu is always measured from the realized basis, never assumed.
struct GroundTruth {
  Eigen::Index d;
  Eigen::Index r;
  OrthonormalBasis basis;  // V*, d x r
  Vector spectrum;         // descending, strictly positive
  double mu;               // (d/r) * ||V*||_{2,inf}^2
  double kappa;            // spectrum(0) / spectrum(r-1)
  std::uint64_t seed;
  std::string style;       // "haar", "flat", "spiky:<s>"

  double sigma1() const { return spectrum(0); }
  double sigma_r() const { return spectrum(spectrum.size() - 1); }
  // V* Sigma*^{1/2}, the canonical balanced factor of X*.
  Matrix u_star() const;
};

// Basis styles: haar = orthonormalized Gaussian; flat = orthogonal +-1/sqrt(d)
// sign patterns (mu = 1, needs d divisible by the smallest power of two >= r);
// spiky:<s> = haar blended with s standard-basis directions, re-orthonormalized.
GroundTruth generate_ground_truth(Eigen::Index d, Eigen::Index r, double kappa,
                                  double sigma1, const std::string& style,
                                  std::uint64_t seed);

double measure_incoherence(const OrthonormalBasis& v);

Matrix materialize(const GroundTruth& gt);

// True when d < 9 mu r, outside the regime the analysis assumes; callers log
// a warning rather than refusing.
bool below_regime_bound(const GroundTruth& gt);

}  // namespace mcimplicit
