#pragma once

#include <Eigen/Core>

#include "tngd/rng.hpp"

namespace tngd::numerics {

// 64-bit dense storage shared by every module. Matrices are row-major so a
// row of the Jacobian (one sample, one output) is contiguous.
using DenseVector = Eigen::VectorXd;
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kSymmetryTolerance = 1e-10;

/// Solves A x = b for symmetric positive definite A.
///
/// A is checked for symmetry (max |A - A^T| <= 1e-10 * max(1, max|A|)) and
/// symmetrized before factorization. Throws NotPositiveDefinite when the
/// Cholesky factorization meets a non-positive pivot; the usual remedy is to
/// increase the damping.
[[nodiscard]] DenseVector cholesky_solve(const DenseMatrix& a, const DenseVector& b);

/// Same contract as cholesky_solve for several right-hand sides (columns of b).
[[nodiscard]] DenseMatrix cholesky_solve(const DenseMatrix& a, const DenseMatrix& b);

/// i.i.d. N(mean, variance) samples; advances the stream by 2 * length positions
/// (nothing is drawn when variance is zero).
[[nodiscard]] DenseVector gaussian_vector(RngStream& rng, Eigen::Index length, double mean,
                                          double variance);

[[nodiscard]] DenseVector matvec(const DenseMatrix& a, const DenseVector& x);
[[nodiscard]] DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
[[nodiscard]] DenseMatrix transpose(const DenseMatrix& a);
/// y + alpha * x
[[nodiscard]] DenseVector add_scaled(const DenseVector& y, double alpha, const DenseVector& x);
[[nodiscard]] DenseMatrix add_scaled(const DenseMatrix& y, double alpha, const DenseMatrix& x);

[[nodiscard]] bool all_finite(const DenseVector& v);
[[nodiscard]] bool all_finite(const DenseMatrix& m);
[[nodiscard]] bool is_symmetric(const DenseMatrix& a, double tolerance = kSymmetryTolerance);
[[nodiscard]] DenseMatrix symmetrized(const DenseMatrix& a);

/// ||x - reference|| / ||reference||, or ||x|| when the reference is zero.
[[nodiscard]] double relative_error(const DenseVector& x, const DenseVector& reference);
[[nodiscard]] double cosine_similarity(const DenseVector& a, const DenseVector& b);

}  // namespace tngd::numerics
