#include "tngd/thermo_solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "tngd/error.hpp"

namespace tngd::thermo {

namespace {

// Tolerance for treating t/dt as an integer.
constexpr double kStepSlack = 1e-9;

void check_system_dims(const DampedLowRankSystem& s) {
  const auto rows = s.jacobian.rows();
  require(s.loss_hessian.rows() == rows && s.loss_hessian.cols() == rows,
          ErrorCode::DimensionMismatch,
          "loss Hessian must be " + std::to_string(rows) + "x" + std::to_string(rows));
  require(s.rhs.size() == s.jacobian.cols(), ErrorCode::DimensionMismatch,
          "rhs length " + std::to_string(s.rhs.size()) + " vs N=" +
              std::to_string(s.jacobian.cols()));
  require(s.block_size >= 0 && (s.block_size == 0 || rows % s.block_size == 0),
          ErrorCode::DimensionMismatch, "block size must divide the Jacobian row count");
}

// Workspace-backed Euler-Maruyama integrator; keeps the inner loop allocation free.
class Integrator {
 public:
  Integrator(Eigen::Index n, double dt, double noise_variance)
      : dt_(dt), noise_scale_(std::sqrt(2.0 * noise_variance * dt)), drift_(n) {}

  void step(OuState& state, const DampedLowRankSystem& system) {
    rows_.noalias() = system.jacobian * state.x;
    hessian_rows_ = system.apply_hessian(rows_);
    drift_.noalias() = system.jacobian.transpose() * hessian_rows_;
    drift_ += system.damping * state.x - system.rhs;
    state.x -= dt_ * drift_;
    if (noise_scale_ > 0.0) {
      for (Eigen::Index i = 0; i < state.x.size(); ++i) state.x[i] += noise_scale_ * state.rng.normal();
    }
    state.elapsed += dt_;
    if (!state.x.allFinite()) {
      fail(ErrorCode::NonFinite,
           "OU state diverged; step size " + std::to_string(dt_) +
               " likely exceeds 2/lambda_max of the drift matrix");
    }
  }

 private:
  double dt_;
  double noise_scale_;
  DenseVector rows_;
  DenseVector hessian_rows_;
  DenseVector drift_;
};

std::size_t window_length(std::size_t steps, double fraction) {
  if (steps == 0) return 0;
  const auto w = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(steps) - kStepSlack));
  return std::clamp<std::size_t>(w, 1, steps);
}

void apply_warm_start(OuState& state, const DampedLowRankSystem& system, WarmStart policy) {
  switch (policy) {
    case WarmStart::ResetToRhs: state.x = system.rhs; break;
    case WarmStart::ResetToZero: state.x = DenseVector::Zero(system.dim()); break;
    case WarmStart::KeepPrevious:
      if (state.x.size() == 0) state.x = system.rhs;
      break;
  }
  require(state.x.size() == system.dim(), ErrorCode::DimensionMismatch,
          "OU state length " + std::to_string(state.x.size()) + " vs system N=" +
              std::to_string(system.dim()));
}

// Runs `first` for `split` steps and `second` for the rest; averages the trailing window.
EvolveResult integrate(OuState state, const DampedLowRankSystem& first,
                       const DampedLowRankSystem& second, std::size_t split,
                       const TlsConfig& config) {
  const std::size_t steps = config.step_count();
  if (steps == 0) return {state.x, std::move(state), 0};

  const std::size_t window = window_length(steps, config.averaging_window);
  Integrator integrator(state.x.size(), config.step_size, config.noise_variance);
  DenseVector sum = DenseVector::Zero(state.x.size());
  for (std::size_t k = 0; k < steps; ++k) {
    integrator.step(state, k < split ? first : second);
    if (k >= steps - window) sum += state.x;
  }
  return {sum / static_cast<double>(window), std::move(state), steps};
}

}  // namespace

void DampedLowRankSystem::validate() const {
  check_system_dims(*this);
  require(jacobian.allFinite() && loss_hessian.allFinite() && rhs.allFinite() &&
              std::isfinite(damping),
          ErrorCode::NonFinite, "system has non-finite entries");
  require(damping >= 0.0, ErrorCode::InvalidArgument, "damping must be nonnegative");
  require(!(jacobian.rows() < jacobian.cols() && damping <= 0.0), ErrorCode::InvalidArgument,
          "damping must be positive when b*d_z < N (the curvature is rank deficient)");
  require(numerics::is_symmetric(loss_hessian), ErrorCode::InvalidArgument,
          "loss Hessian is not symmetric");

  const Eigen::Index block = block_size > 0 ? block_size : loss_hessian.rows();
  for (Eigen::Index start = 0; start < loss_hessian.rows(); start += block) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(
        numerics::symmetrized(loss_hessian.block(start, start, block, block)),
        Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    require(eig.eigenvalues().minCoeff() >= -numerics::kSymmetryTolerance * scale,
            ErrorCode::NotPositiveDefinite, "loss Hessian is not positive semi-definite");
  }
}

DenseVector DampedLowRankSystem::apply_hessian(const DenseVector& u) const {
  if (block_size <= 0) return loss_hessian * u;
  DenseVector out(u.size());
  for (Eigen::Index start = 0; start < u.size(); start += block_size) {
    out.segment(start, block_size).noalias() =
        loss_hessian.block(start, start, block_size, block_size) * u.segment(start, block_size);
  }
  return out;
}

DenseVector DampedLowRankSystem::apply(const DenseVector& x) const {
  require(x.size() == dim(), ErrorCode::DimensionMismatch,
          "apply: vector length " + std::to_string(x.size()) + " vs N=" + std::to_string(dim()));
  const DenseVector u = jacobian * x;
  DenseVector out = jacobian.transpose() * apply_hessian(u);
  out += damping * x;
  return out;
}

DenseMatrix DampedLowRankSystem::explicit_matrix() const {
  check_system_dims(*this);
  DenseMatrix a = jacobian.transpose() * (loss_hessian * jacobian);
  a.diagonal().array() += damping;
  return numerics::symmetrized(a);
}

void TlsConfig::validate() const {
  require(noise_variance >= 0.0 && std::isfinite(noise_variance), ErrorCode::InvalidArgument,
          "noise variance must be finite and nonnegative");
  require(step_size > 0.0 && std::isfinite(step_size), ErrorCode::InvalidArgument,
          "step size must be positive");
  require(analog_time >= 0.0 && std::isfinite(analog_time), ErrorCode::InvalidArgument,
          "analog time must be nonnegative");
  require(analog_time == 0.0 || step_size <= analog_time * (1.0 + kStepSlack),
          ErrorCode::InvalidArgument, "step size must not exceed the analog time");
  require(averaging_window > 0.0 && averaging_window <= 1.0, ErrorCode::InvalidArgument,
          "averaging window fraction must lie in (0, 1]");
}

std::size_t TlsConfig::step_count() const {
  if (analog_time <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(analog_time / step_size - kStepSlack));
}

std::size_t TlsConfig::steps_for(double time) const {
  if (time <= 0.0) return 0;
  return std::min(step_count(), static_cast<std::size_t>(std::llround(time / step_size)));
}

OuState ou_step(OuState state, const DampedLowRankSystem& system, double dt,
                double noise_variance) {
  require(dt > 0.0, ErrorCode::InvalidArgument, "ou_step: dt must be positive");
  require(noise_variance >= 0.0, ErrorCode::InvalidArgument, "ou_step: negative noise variance");
  require(state.x.size() == system.dim(), ErrorCode::DimensionMismatch,
          "ou_step: state length vs system dimension");
  Integrator integrator(system.dim(), dt, noise_variance);
  integrator.step(state, system);
  return state;
}

EvolveResult evolve(OuState state, const DampedLowRankSystem& system, const TlsConfig& config) {
  config.validate();
  check_system_dims(system);
  apply_warm_start(state, system, config.warm_start);
  return integrate(std::move(state), system, system, 0, config);
}

EvolveResult evolve_delayed(OuState state, const DampedLowRankSystem& stale,
                            const DampedLowRankSystem& fresh, const TlsConfig& config,
                            double delay) {
  config.validate();
  check_system_dims(stale);
  check_system_dims(fresh);
  require(stale.dim() == fresh.dim(), ErrorCode::DimensionMismatch,
          "stale and fresh systems differ in N");
  require(delay >= 0.0, ErrorCode::InvalidArgument, "delay must be nonnegative");
  if (state.x.size() == 0) state.x = stale.rhs;
  require(state.x.size() == fresh.dim(), ErrorCode::DimensionMismatch,
          "OU state length vs system dimension");
  return integrate(std::move(state), stale, fresh, config.steps_for(delay), config);
}

DenseVector analytic_mean(const DampedLowRankSystem& system, const DenseVector& x0, double t) {
  require(x0.size() == system.dim(), ErrorCode::DimensionMismatch,
          "analytic_mean: x0 length vs N");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(system.explicit_matrix());
  const DenseVector& values = eig.eigenvalues();
  require(values.size() == 0 || values.minCoeff() > 0.0, ErrorCode::NotPositiveDefinite,
          "analytic_mean: drift matrix is not positive definite");
  const DenseMatrix& vectors = eig.eigenvectors();
  const DenseVector coords = vectors.transpose() * system.rhs;
  const DenseVector solution = vectors * coords.cwiseQuotient(values);
  const DenseVector offset = vectors.transpose() * (x0 - solution);
  const DenseVector decay = (-values.array() * t).exp().matrix();
  return vectors * offset.cwiseProduct(decay) + solution;
}

DenseMatrix equilibrium_covariance(const DampedLowRankSystem& system, double noise_variance) {
  require(noise_variance >= 0.0, ErrorCode::InvalidArgument, "negative noise variance");
  const DenseMatrix a = system.explicit_matrix();
  const DenseMatrix inverse =
      numerics::cholesky_solve(a, DenseMatrix(DenseMatrix::Identity(a.rows(), a.cols())));
  return noise_variance * numerics::symmetrized(inverse);
}

}  // namespace tngd::thermo
