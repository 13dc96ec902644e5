#pragma once

#include <Eigen/Dense>

#include "mcimplicit/errors.hpp"
#include "mcimplicit/tolerances.hpp"

namespace mcimplicit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A d x k matrix with orthonormal columns; orthonormality is checked on
// construction (||V^T V - I||_F <= tol) and can then be relied upon.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Matrix m,
                            double tol = default_tolerances().orthonormality_abs);
  const Matrix& matrix() const { return m_; }
  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }

 private:
  Matrix m_;
};

struct MatrixNorms {
  double op;       // largest singular value
  double fro;
  double two_inf;  // max row euclidean norm
  double max;      // max absolute entry
};

MatrixNorms matrix_norms(const Matrix& m);

double operator_norm(const Matrix& m);
// Operator norm of a symmetric matrix (max |eigenvalue|); cheaper than the
// general SVD route and used in per-iteration trace recording.
double sym_operator_norm(const Matrix& m);
double two_inf_norm(const Matrix& m);

// Z (Z^T Z)^{-1/2} via SVD of Z. Throws SingularMatrixError when
// sigma_min(Z) <= rank_tol_rel * sigma_max(Z).
OrthonormalBasis polar_orthonormalize(
    const Matrix& z, double rank_tol_rel = default_tolerances().rank_deficiency_rel);

struct Projection {
  Matrix onto;        // V V^T U
  Matrix complement;  // U - onto
};
Projection project(const OrthonormalBasis& v, const Matrix& u);

// min over orthogonal O of ||X - Y O||_F, via the SVD of Y^T X.
double procrustes_dist(const Matrix& x, const Matrix& y);

struct EigPairs {
  Vector values;            // k eigenvalues, ranked by |value| descending
  OrthonormalBasis vectors; // corresponding eigenvectors, d x k
};

// Top-k eigen-pairs of a symmetric matrix ranked by eigenvalue magnitude,
// i.e. the pairs of the Frobenius-best rank-k approximation. Signs fixed so
// each eigenvector's largest-magnitude entry is positive.
EigPairs partial_eig_sym(const Matrix& a, Eigen::Index k,
                         double sym_tol = default_tolerances().symmetry_abs);

}  // namespace mcimplicit
