#include "dgpal/kernel.hpp"

namespace dgpal {

Matrix sq_dist(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionMismatch("sq_dist: designs differ in column count");
  }
  Matrix d2(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      d2(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
  }
  return d2;
}

Matrix sq_dist(const Matrix& a) {
  Matrix d2 = Matrix::Zero(a.rows(), a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = i + 1; j < a.rows(); ++j) {
      d2(i, j) = (a.row(i) - a.row(j)).squaredNorm();
      d2(j, i) = d2(i, j);
    }
  }
  return d2;
}

Matrix cov_matrix(const Matrix& x, const KernelParams& p) {
  p.validate();
  Matrix k = (-sq_dist(x) / p.theta).array().exp();
  k.diagonal().array() += p.g;
  return p.tau2 * k;
}

Matrix cross_cov(const Matrix& a, const Matrix& b, double theta) {
  if (!(theta > 0.0)) throw DomainError("cross_cov: theta must be > 0");
  return (-sq_dist(a, b) / theta).array().exp();
}

Vector cross_cov_point(const Matrix& a, const Vector& point, double theta) {
  if (a.cols() != point.size()) {
    throw DimensionMismatch("cross_cov_point: point dimension mismatch");
  }
  Vector k(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    k(i) = std::exp(-(a.row(i).transpose() - point).squaredNorm() / theta);
  }
  return k;
}

}  // namespace dgpal
