#pragma once

#include <cstdint>
#include <vector>

#include "mcimplicit/matops.hpp"

namespace mcimplicit {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Bernoulli observation mask. Each ordered pair (i, j), diagonal included, is
// sampled independently with probability p; the mask itself is NOT symmetric.
// Symmetry enters only through the R_Omega symmetrization below.
class ObservationSet {
 public:
  ObservationSet(Eigen::Index d, double p, std::uint64_t seed, MaskMatrix mask);

  Eigen::Index d() const { return d_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  const MaskMatrix& mask() const { return mask_; }
  bool observed(Eigen::Index i, Eigen::Index j) const { return mask_(i, j) != 0; }
  double observed_fraction() const;

 private:
  Eigen::Index d_;
  double p_;
  std::uint64_t seed_;
  MaskMatrix mask_;
};

ObservationSet sample_mask(Eigen::Index d, double p, std::uint64_t seed);

// Entrywise X .* mask.
Matrix apply_P_Omega(const ObservationSet& obs, const Matrix& x);

// (P_Omega(X) + P_Omega(X)^T) / (2p); exactly symmetric by construction.
Matrix apply_R_Omega(const ObservationSet& obs, const Matrix& x);

// Leave-one-out operator: identical to R_Omega except that row l and column l
// are deterministically set to the corresponding rows of (X + X^T)/2
// (indices are 0-based).
Matrix apply_R_Omega_loo(const ObservationSet& obs, Eigen::Index l, const Matrix& x);

// ||(mask + mask^T)/(2p) - J|| with J all-ones; divided by sqrt(d/p) this
// estimates the universal constant in the mask concentration bound.
double omega_deviation(const ObservationSet& obs);

// Run-length encoding of the mask in row-major order, starting with the run
// of zeros (possibly empty). Exact reproducibility without re-sampling.
std::vector<std::uint64_t> mask_to_rle(const ObservationSet& obs);
ObservationSet mask_from_rle(Eigen::Index d, double p, std::uint64_t seed,
                             const std::vector<std::uint64_t>& rle);

}  // namespace mcimplicit
