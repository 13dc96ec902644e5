#include "mcimplicit/matops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace mcimplicit {

namespace {

void require_nonempty(const Matrix& m, const char* who) {
  if (m.rows() < 1 || m.cols() < 1) {
    std::ostringstream os;
    os << who << ": empty matrix (" << m.rows() << "x" << m.cols() << ")";
    throw DimensionError(os.str());
  }
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(Matrix m, double tol) : m_(std::move(m)) {
  require_nonempty(m_, "OrthonormalBasis");
  const Eigen::Index k = m_.cols();
  const double defect =
      (m_.transpose() * m_ - Matrix::Identity(k, k)).norm();
  if (!(defect <= tol)) {
    std::ostringstream os;
    os << "OrthonormalBasis: columns not orthonormal, ||V^T V - I||_F = " << defect;
    throw DimensionError(os.str());
  }
}

MatrixNorms matrix_norms(const Matrix& m) {
  require_nonempty(m, "matrix_norms");
  if (!m.allFinite()) throw DimensionError("matrix_norms: non-finite entry");
  MatrixNorms n;
  n.op = operator_norm(m);
  n.fro = m.norm();
  n.two_inf = two_inf_norm(m);
  n.max = m.cwiseAbs().maxCoeff();
  return n;
}

double operator_norm(const Matrix& m) {
  require_nonempty(m, "operator_norm");
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double sym_operator_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double two_inf_norm(const Matrix& m) {
  require_nonempty(m, "two_inf_norm");
  return std::sqrt(m.rowwise().squaredNorm().maxCoeff());
}

OrthonormalBasis polar_orthonormalize(const Matrix& z, double rank_tol_rel) {
  require_nonempty(z, "polar_orthonormalize");
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  const double smax = s(0);
  if (!(smin > rank_tol_rel * smax)) {
    std::ostringstream os;
    os << "polar_orthonormalize: rank-deficient input, sigma_min = " << smin
       << " (sigma_max = " << smax << ")";
    throw SingularMatrixError(os.str(), smin);
  }
  return OrthonormalBasis(svd.matrixU() * svd.matrixV().transpose());
}

Projection project(const OrthonormalBasis& v, const Matrix& u) {
  if (v.rows() != u.rows()) {
    std::ostringstream os;
    os << "project: row mismatch, V is " << v.rows() << "x" << v.cols()
       << ", U is " << u.rows() << "x" << u.cols();
    throw DimensionError(os.str());
  }
  Projection p;
  p.onto = v.matrix() * (v.matrix().transpose() * u);
  p.complement = u - p.onto;
  return p;
}

double procrustes_dist(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    std::ostringstream os;
    os << "procrustes_dist: shape mismatch, " << x.rows() << "x" << x.cols()
       << " vs " << y.rows() << "x" << y.cols();
    throw DimensionError(os.str());
  }
  Eigen::BDCSVD<Matrix> svd(y.transpose() * x);
  const double cross = svd.singularValues().sum();
  const double d2 = x.squaredNorm() + y.squaredNorm() - 2.0 * cross;
  return std::sqrt(std::max(0.0, d2));
}

EigPairs partial_eig_sym(const Matrix& a, Eigen::Index k, double sym_tol) {
  require_nonempty(a, "partial_eig_sym");
  if (a.rows() != a.cols())
    throw DimensionError("partial_eig_sym: input not square");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= sym_tol)) {
    std::ostringstream os;
    os << "partial_eig_sym: input asymmetric, ||A - A^T||_max = " << asym;
    throw DimensionError(os.str());
  }
  const Eigen::Index d = a.rows();
  if (k < 1 || k > d)
    throw DimensionError("partial_eig_sym: k out of range");

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  const Vector& values = es.eigenvalues();
  const Matrix& vectors = es.eigenvectors();

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index i, Eigen::Index j) {
    const double ai = std::abs(values(i)), aj = std::abs(values(j));
    if (ai != aj) return ai > aj;
    if (values(i) != values(j)) return values(i) > values(j);
    return i < j;
  });

  Vector vals(k);
  Matrix vecs(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    vals(j) = values(idx[static_cast<std::size_t>(j)]);
    Vector v = vectors.col(idx[static_cast<std::size_t>(j)]);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v(argmax) < 0.0) v = -v;
    vecs.col(j) = v;
  }
  return EigPairs{std::move(vals), OrthonormalBasis(std::move(vecs))};
}

}  // namespace mcimplicit
