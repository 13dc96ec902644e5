#include "mcimplicit/sampling.hpp"

#include <sstream>

#include "mcimplicit/rng.hpp"

namespace mcimplicit {

namespace {

void require_square_match(const ObservationSet& obs, const Matrix& x, const char* who) {
  if (x.rows() != obs.d() || x.cols() != obs.d()) {
    std::ostringstream os;
    os << who << ": expected " << obs.d() << "x" << obs.d() << " input, got "
       << x.rows() << "x" << x.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace

ObservationSet::ObservationSet(Eigen::Index d, double p, std::uint64_t seed,
                               MaskMatrix mask)
    : d_(d), p_(p), seed_(seed), mask_(std::move(mask)) {
  if (d < 1) throw DimensionError("ObservationSet: d must be >= 1");
  if (!(p > 0.0 && p <= 1.0))
    throw DimensionError("ObservationSet: p must be in (0, 1]");
  if (mask_.rows() != d || mask_.cols() != d)
    throw DimensionError("ObservationSet: mask shape mismatch");
}

double ObservationSet::observed_fraction() const {
  return mask_.cast<double>().sum() / static_cast<double>(d_ * d_);
}

ObservationSet sample_mask(Eigen::Index d, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw DimensionError("sample_mask: p must be in (0, 1]");
  RngStream rng(stream_key(seed, "mask",
                           {static_cast<std::uint64_t>(d), double_bits(p)}));
  MaskMatrix mask(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      mask(i, j) = rng.next_uniform() < p ? 1 : 0;
  return ObservationSet(d, p, seed, std::move(mask));
}

Matrix apply_P_Omega(const ObservationSet& obs, const Matrix& x) {
  require_square_match(obs, x, "apply_P_Omega");
  return x.cwiseProduct(obs.mask().cast<double>());
}

Matrix apply_R_Omega(const ObservationSet& obs, const Matrix& x) {
  require_square_match(obs, x, "apply_R_Omega");
  const Matrix p = apply_P_Omega(obs, x);
  return (p + p.transpose()) / (2.0 * obs.p());
}

Matrix apply_R_Omega_loo(const ObservationSet& obs, Eigen::Index l, const Matrix& x) {
  require_square_match(obs, x, "apply_R_Omega_loo");
  if (l < 0 || l >= obs.d())
    throw DimensionError("apply_R_Omega_loo: index l out of range");
  Matrix r = apply_R_Omega(obs, x);
  // Row/column l are deterministic: exactly the symmetrized values of X.
  for (Eigen::Index j = 0; j < obs.d(); ++j) {
    const double v = 0.5 * (x(l, j) + x(j, l));
    r(l, j) = v;
    r(j, l) = v;
  }
  return r;
}

double omega_deviation(const ObservationSet& obs) {
  const Matrix m = obs.mask().cast<double>();
  const Matrix dev = (m + m.transpose()) / (2.0 * obs.p()) -
                     Matrix::Ones(obs.d(), obs.d());
  return sym_operator_norm(dev);
}

std::vector<std::uint64_t> mask_to_rle(const ObservationSet& obs) {
  std::vector<std::uint64_t> runs;
  std::uint8_t current = 0;  // encoding starts with the run of zeros
  std::uint64_t length = 0;
  for (Eigen::Index i = 0; i < obs.d(); ++i) {
    for (Eigen::Index j = 0; j < obs.d(); ++j) {
      const std::uint8_t bit = obs.mask()(i, j);
      if (bit == current) {
        ++length;
      } else {
        runs.push_back(length);
        current = bit;
        length = 1;
      }
    }
  }
  runs.push_back(length);
  return runs;
}

ObservationSet mask_from_rle(Eigen::Index d, double p, std::uint64_t seed,
                             const std::vector<std::uint64_t>& rle) {
  MaskMatrix mask(d, d);
  std::uint8_t current = 0;
  Eigen::Index pos = 0;
  const Eigen::Index total = d * d;
  for (std::uint64_t run : rle) {
    for (std::uint64_t k = 0; k < run; ++k) {
      if (pos >= total) throw DimensionError("mask_from_rle: encoding too long");
      mask(pos / d, pos % d) = current;
      ++pos;
    }
    current = current ? 0 : 1;
  }
  if (pos != total) throw DimensionError("mask_from_rle: encoding too short");
  return ObservationSet(d, p, seed, std::move(mask));
}

}  // namespace mcimplicit
