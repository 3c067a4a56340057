#pragma once

#include <cstddef>

#include "tngd/numerics.hpp"
#include "tngd/rng.hpp"

namespace tngd::thermo {

using numerics::DenseMatrix;
using numerics::DenseVector;
using numerics::RngStream;

/// The damped system (J^T H J + lambda I) x = g in factored form.
///
/// J is (b*d_z x N) with rows already carrying the 1/sqrt(b) batch scaling, H
/// is the (b*d_z x b*d_z) loss Hessian. When block_size > 0, H is block
/// diagonal with square blocks of that size and only the blocks are touched.
struct DampedLowRankSystem {
  DenseMatrix jacobian;
  DenseMatrix loss_hessian;
  double damping = 0.0;
  DenseVector rhs;
  Eigen::Index block_size = 0;

  [[nodiscard]] Eigen::Index dim() const noexcept { return jacobian.cols(); }
  [[nodiscard]] Eigen::Index rank_rows() const noexcept { return jacobian.rows(); }

  /// Throws DimensionMismatch / InvalidArgument / NotPositiveDefinite when an
  /// invariant is broken (H asymmetric or indefinite, lambda <= 0 while
  /// b*d_z < N, non-finite entries).
  void validate() const;

  /// H u, honouring the block structure.
  [[nodiscard]] DenseVector apply_hessian(const DenseVector& u) const;
  /// J^T (H (J x)) + lambda x without forming the N x N matrix.
  [[nodiscard]] DenseVector apply(const DenseVector& x) const;
  /// Explicit J^T H J + lambda I (symmetrized); oracle and exact-solver use only.
  [[nodiscard]] DenseMatrix explicit_matrix() const;
};

enum class WarmStart { ResetToRhs, ResetToZero, KeepPrevious };

struct TlsConfig {
  double noise_variance = 0.0;  // kappa_0, also the equilibrium temperature
  double step_size = 0.1;       // in units of tau
  double analog_time = 50.0;    // in units of tau
  double averaging_window = 0.1;
  WarmStart warm_start = WarmStart::KeepPrevious;

  void validate() const;
  /// ceil(analog_time / step_size), 0 when analog_time is 0.
  [[nodiscard]] std::size_t step_count() const;
  /// Steps covering the first `time` units of the trajectory (rounded to nearest).
  [[nodiscard]] std::size_t steps_for(double time) const;
};

struct OuState {
  DenseVector x;
  double elapsed = 0.0;  // units of tau
  RngStream rng;
};

struct EvolveResult {
  DenseVector estimate;
  OuState state;
  std::size_t steps = 0;
};

/// One Euler-Maruyama step of dx = -(A x - g) dt + N(0, 2 kappa_0 dt).
/// Throws NonFinite if the new state blows up (dt above the 2/lambda_max bound).
[[nodiscard]] OuState ou_step(OuState state, const DampedLowRankSystem& system, double dt,
                              double noise_variance);

/// Applies the configured warm-start policy to `state`, integrates for
/// config.step_count() steps and returns the trailing-window time average.
[[nodiscard]] EvolveResult evolve(OuState state, const DampedLowRankSystem& system,
                                  const TlsConfig& config);

/// Like evolve, but the first min(delay, t) of the trajectory runs under
/// `stale` and the remainder under `fresh`. The state is never reset: the
/// device keeps evolving across the system swap.
[[nodiscard]] EvolveResult evolve_delayed(OuState state, const DampedLowRankSystem& stale,
                                          const DampedLowRankSystem& fresh,
                                          const TlsConfig& config, double delay);

/// exp(-A t)(x0 - A^{-1} g) + A^{-1} g via the eigendecomposition of A.
[[nodiscard]] DenseVector analytic_mean(const DampedLowRankSystem& system, const DenseVector& x0,
                                        double t);

/// kappa_0 * A^{-1}, the covariance of the stationary law.
[[nodiscard]] DenseMatrix equilibrium_covariance(const DampedLowRankSystem& system,
                                                 double noise_variance);

}  // namespace tngd::thermo
