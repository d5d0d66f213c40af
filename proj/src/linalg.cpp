#include "dgpal/linalg.hpp"

#include <cmath>

namespace dgpal {

CholFactor cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("cholesky: matrix must be square");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  }
  return CholFactor{llt.matrixL()};
}

CholFactor cholesky_jittered(const Matrix& a, double jitter) {
  try {
    return cholesky(a);
  } catch (const NotPositiveDefinite&) {
    Matrix aj = a;
    aj.diagonal().array() += jitter;
    return cholesky(aj);
  }
}

double logdet(const CholFactor& f) {
  return 2.0 * f.lower.diagonal().array().log().sum();
}

Vector solve_spd(const CholFactor& f, const Vector& b) {
  if (b.size() != f.dim()) {
    throw DimensionMismatch("solve_spd: rhs length does not match factor");
  }
  Vector y = f.lower.triangularView<Eigen::Lower>().solve(b);
  return f.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix solve_spd(const CholFactor& f, const Matrix& b) {
  if (b.rows() != f.dim()) {
    throw DimensionMismatch("solve_spd: rhs rows do not match factor");
  }
  Matrix y = f.lower.triangularView<Eigen::Lower>().solve(b);
  return f.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix inverse_spd(const CholFactor& f) {
  Matrix id = Matrix::Identity(f.dim(), f.dim());
  return solve_spd(f, id);
}

double invquad(const CholFactor& f, const Vector& b) {
  Vector y = f.lower.triangularView<Eigen::Lower>().solve(b);
  return y.squaredNorm();
}

Matrix PartitionedInverse::assemble(const Matrix& base_inv) const {
  const Index n = base_inv.rows();
  Matrix full(n + 1, n + 1);
  full.topLeftCorner(n, n) = base_inv + v * (h * h.transpose());
  full.topRightCorner(n, 1) = h;
  full.bottomLeftCorner(1, n) = h.transpose();
  full(n, n) = 1.0 / v;
  return full;
}

PartitionedInverse extend_inverse(const Matrix& base_inv, const Vector& k,
                                  double corner) {
  if (base_inv.rows() != base_inv.cols() || base_inv.rows() != k.size()) {
    throw DimensionMismatch("extend_inverse: base_inv and k do not conform");
  }
  Vector base_inv_k = base_inv * k;
  const double v = corner - k.dot(base_inv_k);
  if (v <= 1e-12) {
    throw DegenerateUpdate("extend_inverse: Schur complement not positive");
  }
  return PartitionedInverse{v, -base_inv_k / v};
}

}  // namespace dgpal
