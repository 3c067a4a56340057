#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "tngd/curvature.hpp"
#include "tngd/thermo_solver.hpp"

namespace tngd::second_order {

using numerics::DenseVector;
using thermo::DampedLowRankSystem;

enum class SolverKind { Exact, ConjugateGradient, Woodbury, Thermodynamic };

struct SolverChoice {
  SolverKind kind = SolverKind::Thermodynamic;
  std::size_t cg_iterations = 200;
  bool cg_warm_start = false;
  thermo::TlsConfig thermo;

  void validate() const;
};

struct SolveReport {
  DenseVector solution;
  double residual_norm = 0.0;
  /// Model calls needed to produce the curvature this backend consumes:
  /// b*d_z Jacobian rows for exact, Woodbury and thermodynamic; 2 per
  /// GGN-vector product for CG.
  std::size_t model_calls = 0;
  double wall_seconds_digital = 0.0;
  double analog_seconds_estimated = 0.0;
};

/// Called after every CG iteration with the 1-based iteration index and iterate.
using CgObserver = std::function<void(std::size_t, const DenseVector&)>;

/// Dense Cholesky solve of the explicit (J^T H J + lambda I); N <= 5000.
[[nodiscard]] SolveReport solve_exact(const DampedLowRankSystem& system);

/// Exactly `iterations` unpreconditioned CG steps from x0 (zero unless given).
/// Throws BreakdownDetected if a curvature product p^T A p is <= 0.
[[nodiscard]] SolveReport solve_cg(const DampedLowRankSystem& system, std::size_t iterations,
                                   const DenseVector* x0 = nullptr, const CgObserver& observer = {});

/// Same iteration against the matrix-free model operator; model calls are read
/// off the network's counters.
[[nodiscard]] SolveReport solve_cg(const curvature::GgnOperator& op, const DenseVector& rhs,
                                   std::size_t iterations, const DenseVector* x0 = nullptr,
                                   const CgObserver& observer = {});

/// lambda^{-1} g - lambda^{-2} U (I + lambda^{-1} V U)^{-1} V g, U = J^T, V = H J.
/// The inner (b*d_z)^2 system is solved by partial-pivot LU; SingularInner if
/// its reciprocal condition estimate underflows.
[[nodiscard]] SolveReport solve_woodbury(const DampedLowRankSystem& system);

struct ThermoSolve {
  SolveReport report;
  thermo::OuState state;
};

/// Runs the simulated device. The warm state (if any) supplies x0 and the noise
/// stream; otherwise a fresh state on `rng` is used. The warm-start policy in
/// `config` decides whether x0 is kept or reset.
[[nodiscard]] ThermoSolve solve_thermo(const DampedLowRankSystem& system,
                                       const thermo::TlsConfig& config,
                                       std::optional<thermo::OuState> warm,
                                       numerics::RngStream rng, double rc_seconds = 1e-6);

/// Time-stepped thermo solve where the first `delay` of evolution sees `stale`.
[[nodiscard]] ThermoSolve solve_thermo_delayed(const DampedLowRankSystem& stale,
                                               const DampedLowRankSystem& fresh,
                                               const thermo::TlsConfig& config, double delay,
                                               thermo::OuState state, double rc_seconds = 1e-6);

}  // namespace tngd::second_order
