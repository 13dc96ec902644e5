#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcimplicit/matops.hpp"
#include "mcimplicit/rng.hpp"

using namespace mcimplicit;

namespace {

// Independent operator-norm oracle: sqrt of the top eigenvalue of M^T M,
// a different algebraic route than the SVD used by the library.
double op_norm_oracle(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.transpose() * m);
  return std::sqrt(es.eigenvalues().maxCoeff());
}

}  // namespace

TEST_CASE("matrix_norms on identity") {
  const Matrix eye = Matrix::Identity(2, 2);
  const MatrixNorms n = matrix_norms(eye);
  CHECK(n.op == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n.fro == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(n.two_inf == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n.max == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two_inf picks the 3-4-5 row") {
  Matrix m(2, 2);
  m << 3, 4, 0, 0;
  CHECK(matrix_norms(m).two_inf == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("norm orderings against the SVD oracle on random matrices") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(stream_key(seed, "norms"));
    const Matrix m = gaussian_matrix(5, 3, rng);
    const MatrixNorms n = matrix_norms(m);
    CHECK(n.op == doctest::Approx(op_norm_oracle(m)).epsilon(1e-10));
    CHECK(n.op <= n.fro + 1e-12);
    CHECK(n.fro <= std::sqrt(3.0) * n.op + 1e-12);
    CHECK(n.two_inf <= n.op + 1e-12);
  }
}

TEST_CASE("matrix_norms rejects empty and non-finite input") {
  CHECK_THROWS_AS(matrix_norms(Matrix(0, 3)), DimensionError);
  Matrix bad(1, 1);
  bad << std::nan("");
  CHECK_THROWS_AS(matrix_norms(bad), DimensionError);
}

TEST_CASE("polar_orthonormalize is the identity on orthonormal input") {
  RngStream rng(stream_key(7, "polar"));
  const Matrix q = haar_frame(6, 3, rng);
  CHECK((polar_orthonormalize(q).matrix() - q).norm() <= 1e-12);
}

TEST_CASE("polar_orthonormalize cancels positive scaling") {
  const Matrix z = 2.0 * Matrix::Identity(3, 3);
  CHECK((polar_orthonormalize(z).matrix() - Matrix::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("polar_orthonormalize diagonal hand case") {
  Matrix z(3, 2);
  z << 3, 0, 0, 0, 0, 4;
  Matrix want(3, 2);
  want << 1, 0, 0, 0, 0, 1;
  CHECK((polar_orthonormalize(z).matrix() - want).norm() <= 1e-12);
}

TEST_CASE("polar_orthonormalize properties on random full-rank input") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RngStream rng(stream_key(seed, "polar_prop"));
    const Eigen::Index d = 4 + static_cast<Eigen::Index>(seed % 5);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(seed % 4);
    const Matrix z = gaussian_matrix(d, k, rng);
    const OrthonormalBasis v = polar_orthonormalize(z);
    const Matrix vtv = v.matrix().transpose() * v.matrix();
    CHECK((vtv - Matrix::Identity(k, k)).norm() <= 1e-10);
    // Span preserved: V V^T Z = Z.
    CHECK((v.matrix() * (v.matrix().transpose() * z) - z).norm() <= 1e-8 * z.norm());
  }
}

TEST_CASE("polar_orthonormalize names sigma_min on rank-deficient input") {
  Matrix z(3, 2);
  z << 1, 2, 2, 4, 3, 6;  // second column = 2x first
  try {
    polar_orthonormalize(z);
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.sigma_min >= 0.0);
    CHECK(std::string(e.what()).find("sigma_min") != std::string::npos);
  }
}

TEST_CASE("project splits inside and outside the span") {
  Matrix v(2, 1);
  v << 1, 0;
  const OrthonormalBasis basis(v);
  Matrix u(2, 2);
  u << 1, 2, 3, 4;
  const Projection p = project(basis, u);
  Matrix onto(2, 2), comp(2, 2);
  onto << 1, 2, 0, 0;
  comp << 0, 0, 3, 4;
  CHECK((p.onto - onto).norm() <= 1e-14);
  CHECK((p.complement - comp).norm() <= 1e-14);
}

TEST_CASE("project: containment and pythagoras") {
  RngStream rng(stream_key(3, "project"));
  const Matrix v = haar_frame(7, 3, rng);
  const OrthonormalBasis basis(v);

  // Columns inside span(V) project to themselves.
  const Matrix inside = v * gaussian_matrix(3, 2, rng);
  CHECK(project(basis, inside).complement.norm() <= 1e-10 * inside.norm());

  for (int rep = 0; rep < 10; ++rep) {
    const Matrix u = gaussian_matrix(7, 4, rng);
    const Projection p = project(basis, u);
    CHECK(p.onto + p.complement == u);  // exact by construction
    CHECK(p.onto.squaredNorm() + p.complement.squaredNorm() ==
          doctest::Approx(u.squaredNorm()).epsilon(1e-10));
    CHECK((v.transpose() * p.complement).norm() <= 1e-10 * u.norm());
  }
}

TEST_CASE("project rejects row mismatch") {
  const OrthonormalBasis basis(Matrix::Identity(3, 2));
  CHECK_THROWS_AS(project(basis, Matrix::Zero(4, 2)), DimensionError);
}

TEST_CASE("procrustes_dist basics") {
  RngStream rng(stream_key(11, "procrustes"));
  const Matrix x = gaussian_matrix(5, 2, rng);
  CHECK(procrustes_dist(x, x) <= 1e-12);

  // Rotation invariance: dist(X, X O) = 0 for orthogonal O.
  const Matrix o = haar_frame(2, 2, rng);
  CHECK(procrustes_dist(x, x * o) <= 1e-10);

  Matrix a(2, 2), b(2, 2);
  a << 2, 0, 0, 0;
  b << 1, 0, 0, 0;
  CHECK(procrustes_dist(a, b) == doctest::Approx(1.0).epsilon(1e-12));

  // Never worse than the plain Frobenius distance.
  const Matrix y = gaussian_matrix(5, 2, rng);
  CHECK(procrustes_dist(x, y) <= (x - y).norm() + 1e-12);

  CHECK_THROWS_AS(procrustes_dist(x, Matrix::Zero(5, 3)), DimensionError);
}

TEST_CASE("partial_eig_sym ranks by magnitude") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3;
  a(1, 1) = 1;
  a(2, 2) = -2;
  const EigPairs e = partial_eig_sym(a, 2);
  CHECK(e.values(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e.values(1) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("partial_eig_sym rank-one case") {
  RngStream rng(stream_key(5, "eig"));
  Vector v = gaussian_matrix(6, 1, rng).col(0);
  const Matrix a = v * v.transpose();
  const EigPairs e = partial_eig_sym(a, 1);
  CHECK(e.values(0) == doctest::Approx(v.squaredNorm()).epsilon(1e-10));
  const Vector unit = v / v.norm();
  const double overlap = std::abs(unit.dot(e.vectors.matrix().col(0)));
  CHECK(overlap == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("partial_eig_sym residual matches the full-decomposition oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(stream_key(seed, "eig_oracle"));
    const Matrix g = gaussian_matrix(6, 6, rng);
    const Matrix a = 0.5 * (g + g.transpose());
    const EigPairs e = partial_eig_sym(a, 3);
    const Matrix approx = e.vectors.matrix() * e.values.asDiagonal() *
                          e.vectors.matrix().transpose();
    // Eckart-Young: the tail energy of the magnitude-sorted spectrum.
    Eigen::SelfAdjointEigenSolver<Matrix> full(a);
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < 6; ++i) mags.push_back(std::abs(full.eigenvalues()(i)));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double tail = 0;
    for (std::size_t i = 3; i < mags.size(); ++i) tail += mags[i] * mags[i];
    CHECK((a - approx).squaredNorm() == doctest::Approx(tail).epsilon(1e-8));
  }
}

TEST_CASE("partial_eig_sym rejects asymmetric input") {
  Matrix a(2, 2);
  a << 0, 1, 0, 0;
  CHECK_THROWS_AS(partial_eig_sym(a, 1), DimensionError);
}

TEST_CASE("2,inf submultiplicativity") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(stream_key(seed, "submult"));
    const Matrix a = gaussian_matrix(6, 4, rng);
    const Matrix b = gaussian_matrix(4, 5, rng);
    CHECK(two_inf_norm(a * b) <= two_inf_norm(a) * operator_norm(b) + 1e-10);
  }
}

TEST_CASE("projector difference bounded by basis difference") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(stream_key(seed, "projdiff"));
    const Matrix v1 = haar_frame(8, 3, rng);
    const Matrix v2 = haar_frame(8, 3, rng);
    const Matrix pd = v1 * v1.transpose() - v2 * v2.transpose();
    CHECK(operator_norm(pd) <= 2.0 * operator_norm(v1 - v2) + 1e-10);
    CHECK(pd.norm() <= 2.0 * (v1 - v2).norm() + 1e-10);
  }
}

TEST_CASE("sigma_r(AB) >= sigma_r(A) sigma_r(B) for invertible square A") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(stream_key(seed, "sigmin"));
    const Matrix a = gaussian_matrix(3, 3, rng) + 3.0 * Matrix::Identity(3, 3);
    const Matrix b = gaussian_matrix(3, 6, rng);
    Eigen::BDCSVD<Matrix> sa(a), sb(b), sab(a * b);
    const double ra = sa.singularValues()(2);
    const double rb = sb.singularValues()(2);
    const double rab = sab.singularValues()(2);
    CHECK(rab >= ra * rb - 1e-10);
  }
}

TEST_CASE("procrustes distance against the gram-difference bound") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(stream_key(seed, "tu"));
    const Matrix x = gaussian_matrix(7, 3, rng);
    const Matrix y = gaussian_matrix(7, 3, rng);
    Eigen::BDCSVD<Matrix> sx(x);
    const double sig_r = sx.singularValues()(2);
    if (sig_r < 1e-8) continue;
    const double lhs = procrustes_dist(x, y);
    const double rhs = (x * x.transpose() - y * y.transpose()).squaredNorm() /
                       (2.0 * (std::sqrt(2.0) - 1.0) * sig_r * sig_r);
    CHECK(lhs * lhs <= rhs + 1e-10);
  }
}

TEST_CASE("max-norm factorization bound") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(stream_key(seed, "maxnorm"));
    const Matrix u = gaussian_matrix(6, 3, rng);
    const Matrix v = gaussian_matrix(5, 3, rng);
    Matrix sig = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) sig(i, i) = rng.next_uniform() * 2 - 1;
    const Matrix prod = u * sig * v.transpose();
    CHECK(prod.cwiseAbs().maxCoeff() <=
          operator_norm(sig) * two_inf_norm(u) * two_inf_norm(v) + 1e-10);
  }
}

TEST_CASE("OrthonormalBasis rejects non-orthonormal columns") {
  Matrix m(3, 2);
  m << 1, 1, 0, 1, 0, 0;
  CHECK_THROWS_AS(OrthonormalBasis{m}, DimensionError);
}
