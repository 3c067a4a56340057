#include "tngd/second_order.hpp"

#include <Eigen/LU>
#include <chrono>
#include <limits>
#include <string>

#include "tngd/error.hpp"

namespace tngd::second_order {

namespace {

using Clock = std::chrono::steady_clock;
using numerics::DenseMatrix;

constexpr double kInnerConditionFloor = 1e-14;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Apply>
DenseVector conjugate_gradient(const Apply& apply, const DenseVector& rhs, std::size_t iterations,
                               const DenseVector* x0, const CgObserver& observer,
                               std::size_t& products) {
  require(iterations >= 1, ErrorCode::InvalidArgument, "CG needs at least one iteration");
  DenseVector x = DenseVector::Zero(rhs.size());
  DenseVector r = rhs;
  if (x0 != nullptr) {
    require(x0->size() == rhs.size(), ErrorCode::DimensionMismatch, "CG: x0 length");
    x = *x0;
    r -= apply(x);
    ++products;
  }
  DenseVector p = r;
  double rr = r.squaredNorm();
  for (std::size_t k = 1; k <= iterations; ++k) {
    // Exact solution reached; past this point p^T A p underflows.
    if (rr < std::numeric_limits<double>::min()) break;
    const DenseVector ap = apply(p);
    ++products;
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) {
      fail(ErrorCode::BreakdownDetected,
           "CG iteration " + std::to_string(k) + " met p^T A p = " + std::to_string(curvature));
    }
    const double alpha = rr / curvature;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    if (observer) observer(k, x);
  }
  return x;
}

}  // namespace

void SolverChoice::validate() const {
  require(kind != SolverKind::ConjugateGradient || cg_iterations >= 1, ErrorCode::InvalidArgument,
          "CG iteration budget must be at least 1");
  if (kind == SolverKind::Thermodynamic) thermo.validate();
}

SolveReport solve_exact(const DampedLowRankSystem& system) {
  const auto start = Clock::now();
  require(system.dim() <= curvature::Network::kMaxExplicitParameters, ErrorCode::TooLarge,
          "exact solve needs N <= " + std::to_string(curvature::Network::kMaxExplicitParameters));
  system.validate();
  SolveReport report;
  report.solution = numerics::cholesky_solve(system.explicit_matrix(), system.rhs);
  report.residual_norm = (system.apply(report.solution) - system.rhs).norm();
  report.model_calls = static_cast<std::size_t>(system.rank_rows());
  report.wall_seconds_digital = seconds_since(start);
  return report;
}

SolveReport solve_cg(const DampedLowRankSystem& system, std::size_t iterations,
                     const DenseVector* x0, const CgObserver& observer) {
  const auto start = Clock::now();
  system.validate();
  std::size_t products = 0;
  SolveReport report;
  report.solution = conjugate_gradient([&](const DenseVector& v) { return system.apply(v); },
                                       system.rhs, iterations, x0, observer, products);
  report.residual_norm = (system.apply(report.solution) - system.rhs).norm();
  report.model_calls = 2 * products;
  report.wall_seconds_digital = seconds_since(start);
  return report;
}

SolveReport solve_cg(const curvature::GgnOperator& op, const DenseVector& rhs,
                     std::size_t iterations, const DenseVector* x0, const CgObserver& observer) {
  require(rhs.size() == op.dim(), ErrorCode::DimensionMismatch, "CG: rhs length vs operator");
  const auto start = Clock::now();
  std::size_t products = 0;
  SolveReport report;
  report.solution = conjugate_gradient([&](const DenseVector& v) { return op.apply(v); }, rhs,
                                       iterations, x0, observer, products);
  report.model_calls = 2 * products;
  report.wall_seconds_digital = seconds_since(start);
  return report;
}

SolveReport solve_woodbury(const DampedLowRankSystem& system) {
  const auto start = Clock::now();
  system.validate();
  require(system.damping > 0.0, ErrorCode::InvalidArgument, "Woodbury needs lambda > 0");
  require(system.rank_rows() <= curvature::Network::kMaxExplicitParameters, ErrorCode::TooLarge,
          "Woodbury inner system needs b*d_z <= " +
              std::to_string(curvature::Network::kMaxExplicitParameters));
  const double inv_lambda = 1.0 / system.damping;
  const DenseMatrix& j = system.jacobian;

  // V = H J (b*d_z x N); inner = I + lambda^{-1} V J^T.
  DenseMatrix v(j.rows(), j.cols());
  if (system.block_size > 0) {
    const Eigen::Index bs = system.block_size;
    for (Eigen::Index s = 0; s < j.rows(); s += bs) {
      v.middleRows(s, bs).noalias() =
          system.loss_hessian.block(s, s, bs, bs) * j.middleRows(s, bs);
    }
  } else {
    v.noalias() = system.loss_hessian * j;
  }
  DenseMatrix inner = inv_lambda * (v * j.transpose());
  inner.diagonal().array() += 1.0;

  const Eigen::PartialPivLU<DenseMatrix> lu(inner);
  if (!(lu.rcond() > kInnerConditionFloor)) {
    fail(ErrorCode::SingularInner, "Woodbury inner matrix is numerically singular");
  }
  const DenseVector vg = v * system.rhs;
  const DenseVector correction = j.transpose() * lu.solve(vg);

  SolveReport report;
  report.solution = inv_lambda * system.rhs - inv_lambda * inv_lambda * correction;
  report.residual_norm = (system.apply(report.solution) - system.rhs).norm();
  report.model_calls = static_cast<std::size_t>(system.rank_rows());
  report.wall_seconds_digital = seconds_since(start);
  return report;
}

ThermoSolve solve_thermo(const DampedLowRankSystem& system, const thermo::TlsConfig& config,
                         std::optional<thermo::OuState> warm, numerics::RngStream rng,
                         double rc_seconds) {
  const auto start = Clock::now();
  thermo::OuState initial = warm ? std::move(*warm) : thermo::OuState{DenseVector{}, 0.0, rng};
  if (warm) {
    require(initial.x.size() == 0 || initial.x.size() == system.dim(),
            ErrorCode::DimensionMismatch, "warm-start state length vs system dimension");
  }
  auto result = thermo::evolve(std::move(initial), system, config);

  ThermoSolve out{{}, std::move(result.state)};
  out.report.solution = std::move(result.estimate);
  out.report.residual_norm = (system.apply(out.report.solution) - system.rhs).norm();
  out.report.model_calls = static_cast<std::size_t>(system.rank_rows());
  out.report.analog_seconds_estimated =
      static_cast<double>(result.steps) * config.step_size * rc_seconds;
  out.report.wall_seconds_digital = seconds_since(start);
  return out;
}

ThermoSolve solve_thermo_delayed(const DampedLowRankSystem& stale, const DampedLowRankSystem& fresh,
                                 const thermo::TlsConfig& config, double delay,
                                 thermo::OuState state, double rc_seconds) {
  const auto start = Clock::now();
  auto result = thermo::evolve_delayed(std::move(state), stale, fresh, config, delay);
  ThermoSolve out{{}, std::move(result.state)};
  out.report.solution = std::move(result.estimate);
  out.report.residual_norm = (fresh.apply(out.report.solution) - fresh.rhs).norm();
  out.report.model_calls = static_cast<std::size_t>(fresh.rank_rows());
  out.report.analog_seconds_estimated =
      static_cast<double>(result.steps) * config.step_size * rc_seconds;
  out.report.wall_seconds_digital = seconds_since(start);
  return out;
}

}  // namespace tngd::second_order
