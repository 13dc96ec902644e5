#include "mcimplicit/ground_truth.hpp"

#include <cmath>
#include <sstream>

#include "mcimplicit/rng.hpp"

namespace mcimplicit {

namespace {

struct StyleSpec {
  enum class Kind { haar, flat, spiky } kind;
  int spikes = 0;
};

StyleSpec parse_style(const std::string& style) {
  if (style == "haar") return {StyleSpec::Kind::haar};
  if (style == "flat") return {StyleSpec::Kind::flat};
  if (style.rfind("spiky:", 0) == 0) {
    const int s = std::stoi(style.substr(6));
    if (s < 0) throw DimensionError("ground truth style: spike count must be >= 0");
    return {StyleSpec::Kind::spiky, s};
  }
  throw DimensionError("ground truth style must be haar, flat, or spiky:<s>, got '" +
                       style + "'");
}

// First r columns of the Sylvester Hadamard matrix of order B (smallest power
// of two >= r), each entry replicated d/B times and scaled by 1/sqrt(d).
Matrix flat_basis(Eigen::Index d, Eigen::Index r) {
  Eigen::Index block = 1;
  while (block < r) block *= 2;
  if (d % block != 0) {
    std::ostringstream os;
    os << "flat basis: no orthogonal sign construction for d=" << d << ", r=" << r
       << " (d must be divisible by " << block << ")";
    throw DimensionError(os.str());
  }
  Matrix h = Matrix::Ones(1, 1);
  for (Eigen::Index n = 1; n < block; n *= 2) {
    Matrix next(2 * n, 2 * n);
    next << h, h, h, -h;
    h = std::move(next);
  }
  const Eigen::Index rep = d / block;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix v(d, r);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < r; ++j) v(i, j) = h(i / rep, j) * scale;
  return v;
}

}  // namespace

Matrix GroundTruth::u_star() const {
  return basis.matrix() * spectrum.cwiseSqrt().asDiagonal();
}

GroundTruth generate_ground_truth(Eigen::Index d, Eigen::Index r, double kappa,
                                  double sigma1, const std::string& style,
                                  std::uint64_t seed) {
  if (r < 1 || r > d) throw DimensionError("generate_ground_truth: need 1 <= r <= d");
  if (!(kappa >= 1.0)) throw DimensionError("generate_ground_truth: kappa must be >= 1");
  if (!(sigma1 > 0.0)) throw DimensionError("generate_ground_truth: sigma1 must be > 0");

  const StyleSpec spec = parse_style(style);
  RngStream rng(stream_key(seed, "ground_truth", {static_cast<std::uint64_t>(d),
                                                  static_cast<std::uint64_t>(r)}));
  Matrix v;
  switch (spec.kind) {
    case StyleSpec::Kind::haar:
      v = haar_frame(d, r, rng);
      break;
    case StyleSpec::Kind::flat:
      v = flat_basis(d, r);
      break;
    case StyleSpec::Kind::spiky: {
      v = haar_frame(d, r, rng);
      const Eigen::Index s = std::min<Eigen::Index>(spec.spikes, r);
      for (Eigen::Index j = 0; j < s; ++j) v(j, j) += 1.0;
      v = polar_orthonormalize(v).matrix();
      break;
    }
  }

  Vector spectrum(r);
  if (r == 1) {
    spectrum(0) = sigma1;
  } else {
    // Geometric interpolation from sigma1 down to sigma1/kappa.
    for (Eigen::Index i = 0; i < r; ++i)
      spectrum(i) = sigma1 * std::pow(kappa, -static_cast<double>(i) /
                                                 static_cast<double>(r - 1));
  }

  OrthonormalBasis basis(std::move(v));
  const double mu = measure_incoherence(basis);
  const double realized_kappa = spectrum(0) / spectrum(r - 1);
  return GroundTruth{d,  r,  std::move(basis), std::move(spectrum),
                     mu, realized_kappa, seed, style};
}

double measure_incoherence(const OrthonormalBasis& v) {
  const double row_max_sq = v.matrix().rowwise().squaredNorm().maxCoeff();
  return static_cast<double>(v.rows()) / static_cast<double>(v.cols()) * row_max_sq;
}

Matrix materialize(const GroundTruth& gt) {
  const Matrix x = gt.basis.matrix() * gt.spectrum.asDiagonal() *
                   gt.basis.matrix().transpose();
  // (M + M^T)/2 kills rounding asymmetry; IEEE addition makes it bit-symmetric.
  return 0.5 * (x + x.transpose());
}

bool below_regime_bound(const GroundTruth& gt) {
  return static_cast<double>(gt.d) < 9.0 * gt.mu * static_cast<double>(gt.r);
}

}  // namespace mcimplicit
