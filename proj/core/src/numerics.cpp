#include "tngd/numerics.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "tngd/error.hpp"

namespace tngd::numerics {

namespace {

std::string shape(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Eigen::LLT<DenseMatrix> factor_spd(const DenseMatrix& a) {
  require(a.rows() == a.cols(), ErrorCode::DimensionMismatch,
          "cholesky_solve needs a square matrix, got " + shape(a));
  require(all_finite(a), ErrorCode::NonFinite, "cholesky_solve: matrix has non-finite entries");
  require(is_symmetric(a), ErrorCode::InvalidArgument, "cholesky_solve: matrix is not symmetric");
  Eigen::LLT<DenseMatrix> llt(symmetrized(a));
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::NotPositiveDefinite, "Cholesky factorization met a non-positive pivot");
  }
  return llt;
}

}  // namespace

DenseVector cholesky_solve(const DenseMatrix& a, const DenseVector& b) {
  require(a.rows() == b.size(), ErrorCode::DimensionMismatch,
          "cholesky_solve: matrix " + shape(a) + " vs rhs " + std::to_string(b.size()));
  return factor_spd(a).solve(b);
}

DenseMatrix cholesky_solve(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(), ErrorCode::DimensionMismatch,
          "cholesky_solve: matrix " + shape(a) + " vs rhs " + shape(b));
  return factor_spd(a).solve(b);
}

DenseVector gaussian_vector(RngStream& rng, Eigen::Index length, double mean, double variance) {
  require(variance >= 0.0, ErrorCode::InvalidArgument, "gaussian_vector: negative variance");
  DenseVector out = DenseVector::Constant(length, mean);
  if (variance == 0.0) return out;
  const double sd = std::sqrt(variance);
  for (Eigen::Index i = 0; i < length; ++i) out[i] += sd * rng.normal();
  return out;
}

DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
  require(a.cols() == x.size(), ErrorCode::DimensionMismatch,
          "matvec: " + shape(a) + " times length " + std::to_string(x.size()));
  return a * x;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorCode::DimensionMismatch,
          "matmul: " + shape(a) + " times " + shape(b));
  return a * b;
}

DenseMatrix transpose(const DenseMatrix& a) { return a.transpose(); }

DenseVector add_scaled(const DenseVector& y, double alpha, const DenseVector& x) {
  require(y.size() == x.size(), ErrorCode::DimensionMismatch, "add_scaled: length mismatch");
  return y + alpha * x;
}

DenseMatrix add_scaled(const DenseMatrix& y, double alpha, const DenseMatrix& x) {
  require(y.rows() == x.rows() && y.cols() == x.cols(), ErrorCode::DimensionMismatch,
          "add_scaled: " + shape(y) + " vs " + shape(x));
  return y + alpha * x;
}

bool all_finite(const DenseVector& v) { return v.allFinite(); }
bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

bool is_symmetric(const DenseMatrix& a, double tolerance) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tolerance * scale;
}

DenseMatrix symmetrized(const DenseMatrix& a) { return 0.5 * (a + a.transpose()); }

double relative_error(const DenseVector& x, const DenseVector& reference) {
  require(x.size() == reference.size(), ErrorCode::DimensionMismatch,
          "relative_error: length mismatch");
  const double denom = reference.norm();
  const double diff = (x - reference).norm();
  return denom > 0.0 ? diff / denom : diff;
}

double cosine_similarity(const DenseVector& a, const DenseVector& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "cosine_similarity: length mismatch");
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

}  // namespace tngd::numerics
