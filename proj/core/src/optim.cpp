#include "tngd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tngd/error.hpp"

namespace tngd::optim {

namespace {

using second_order::SolverKind;
using second_order::SolveReport;

constexpr double kDegenerateModel = 1e-12;
constexpr double kEscalation = 10.0;

bool keeps_device_state(const OptimizerConfig& config) {
  return config.delay_time > 0.0 ||
         config.solver.thermo.warm_start == thermo::WarmStart::KeepPrevious;
}

// Solves the damped system for the natural-gradient direction; may throw
// NotPositiveDefinite so the caller can escalate the damping.
SolveReport natural_direction(TrainState& state, const curvature::Network& network,
                              const curvature::Batch& batch, const OptimizerConfig& config,
                              const DenseVector& gradient, double damping) {
  const auto& solver = config.solver;
  if (solver.kind == SolverKind::ConjugateGradient) {
    const curvature::GgnOperator op(network, state.theta, batch, damping);
    const DenseVector* x0 =
        solver.cg_warm_start && state.previous_estimate.size() == gradient.size()
            ? &state.previous_estimate
            : nullptr;
    return second_order::solve_cg(op, gradient, solver.cg_iterations, x0);
  }

  auto system = network.damped_system(state.theta, batch, damping, gradient);
  switch (solver.kind) {
    case SolverKind::Exact: return second_order::solve_exact(system);
    case SolverKind::Woodbury: return second_order::solve_woodbury(system);
    case SolverKind::Thermodynamic: {
      const double rc = 1e-6;
      second_order::ThermoSolve solved;
      if (config.delay_time > 0.0 && state.stale_system) {
        thermo::OuState device =
            state.ou_state ? std::move(*state.ou_state) : thermo::OuState{{}, 0.0, state.noise};
        solved = second_order::solve_thermo_delayed(*state.stale_system, system, solver.thermo,
                                                    config.delay_time, std::move(device), rc);
      } else {
        std::optional<thermo::OuState> warm;
        if (keeps_device_state(config) && state.ou_state) warm = std::move(state.ou_state);
        solved = second_order::solve_thermo(system, solver.thermo, std::move(warm), state.noise, rc);
      }
      state.noise = solved.state.rng;
      state.ou_state = std::move(solved.state);
      if (config.delay_time > 0.0) state.stale_system = std::move(system);
      return std::move(solved.report);
    }
    case SolverKind::ConjugateGradient: break;
  }
  fail(ErrorCode::InvalidArgument, "unknown solver kind");
}

}  // namespace

void OptimizerConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::InvalidArgument, "learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidArgument,
          "SGD momentum must lie in [0, 1)");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  require(epsilon > 0.0, ErrorCode::InvalidArgument, "Adam epsilon must be positive");
  require(delay_time >= 0.0, ErrorCode::InvalidArgument, "delay time must be nonnegative");
  if (gradient_source == GradientSource::NaturalGradient) {
    require(damping > 0.0, ErrorCode::InvalidArgument, "damping must be positive");
    solver.validate();
    if (solver.kind == SolverKind::Thermodynamic) {
      require(delay_time <= solver.thermo.analog_time, ErrorCode::InvalidArgument,
              "delay time must not exceed the analog time");
    }
  }
  if (lm_schedule) {
    require(lm_schedule->a > 0.5 && lm_schedule->a < 1.0, ErrorCode::InvalidArgument,
            "LM threshold a must lie in (0.5, 1)");
    require(lm_schedule->alpha > 0.0 && lm_schedule->alpha < 1.0, ErrorCode::InvalidArgument,
            "LM factor alpha must lie in (0, 1)");
  }
}

costs::OptimizerKind OptimizerConfig::cost_kind() const {
  if (gradient_source == GradientSource::RawGradient) {
    return update_rule == UpdateRule::Adam ? costs::OptimizerKind::Adam : costs::OptimizerKind::Sgd;
  }
  switch (solver.kind) {
    case SolverKind::Exact: return costs::OptimizerKind::Ngd;
    case SolverKind::ConjugateGradient: return costs::OptimizerKind::NgdCg;
    case SolverKind::Woodbury: return costs::OptimizerKind::NgdWoodbury;
    case SolverKind::Thermodynamic: return costs::OptimizerKind::Tngd;
  }
  return costs::OptimizerKind::Tngd;
}

TrainState TrainState::initial(DenseVector theta, const OptimizerConfig& config,
                               numerics::RngStream noise) {
  TrainState state;
  const auto n = theta.size();
  state.theta = std::move(theta);
  state.damping = config.damping;
  state.velocity = DenseVector::Zero(n);
  state.first_moment = DenseVector::Zero(n);
  state.second_moment = DenseVector::Zero(n);
  state.noise = noise;
  return state;
}

TrainState sgd_update(TrainState state, const DenseVector& direction, double learning_rate,
                      double momentum) {
  require(direction.size() == state.theta.size(), ErrorCode::DimensionMismatch,
          "sgd_update: direction length");
  if (state.velocity.size() != direction.size()) state.velocity = DenseVector::Zero(direction.size());
  state.velocity = momentum * state.velocity + direction;
  state.theta -= learning_rate * state.velocity;
  return state;
}

TrainState adam_update(TrainState state, const DenseVector& direction, double learning_rate,
                       double beta1, double beta2, double epsilon) {
  const auto n = direction.size();
  require(n == state.theta.size(), ErrorCode::DimensionMismatch, "adam_update: direction length");
  if (state.first_moment.size() != n) state.first_moment = DenseVector::Zero(n);
  if (state.second_moment.size() != n) state.second_moment = DenseVector::Zero(n);
  ++state.adam_steps;
  const auto t = static_cast<double>(state.adam_steps);
  state.first_moment = beta1 * state.first_moment + (1.0 - beta1) * direction;
  state.second_moment =
      beta2 * state.second_moment + (1.0 - beta2) * direction.cwiseProduct(direction);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  const auto m_hat = state.first_moment.array() / c1;
  const auto v_hat = state.second_moment.array() / c2;
  state.theta.array() -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
  return state;
}

double reduction_ratio(double new_loss, double old_loss, const DenseVector& gradient,
                       const CurvatureProduct& curvature, const DenseVector& step) {
  require(step.size() == gradient.size(), ErrorCode::DimensionMismatch,
          "reduction_ratio: step length vs gradient");
  const double predicted = gradient.dot(step) + 0.5 * step.dot(curvature(step));
  if (!(std::abs(predicted) > kDegenerateModel)) {
    fail(ErrorCode::DegenerateModel, "quadratic model predicts no change");
  }
  return (new_loss - old_loss) / predicted;
}

double lm_update(double rho, double damping, double a, double alpha) {
  require(a > 0.5 && a < 1.0, ErrorCode::InvalidArgument, "LM threshold a must lie in (0.5, 1)");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument,
          "LM factor alpha must lie in (0, 1)");
  double next = damping;
  if (rho > a) {
    next = alpha * damping;
  } else if (rho < 1.0 - a) {
    next = damping / alpha;
  }
  return std::clamp(next, kMinDamping, kMaxDamping);
}

StepRecord tngd_step(TrainState& state, const curvature::Network& network,
                     const curvature::Batch& batch, const OptimizerConfig& config) {
  const auto calls_before = network.calls().model_calls();
  const auto gradient = network.loss_and_gradient(state.theta, batch);

  StepRecord record;
  record.iteration = state.iteration;
  record.loss = gradient.loss;

  if (config.gradient_source == GradientSource::RawGradient) {
    record.direction = gradient.gradient;
    record.model_calls = 1;
  } else {
    SolveReport report;
    try {
      report = natural_direction(state, network, batch, config, gradient.gradient, state.damping);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotPositiveDefinite) throw;
      state.damping = std::min(kMaxDamping, kEscalation * state.damping);
      record.damping_escalated = true;
      report = natural_direction(state, network, batch, config, gradient.gradient, state.damping);
    }
    record.direction = std::move(report.solution);
    record.analog_seconds = report.analog_seconds_estimated;
    record.model_calls = network.calls().model_calls() - calls_before;
  }

  const DenseVector theta_before = state.theta;
  if (config.update_rule == UpdateRule::Adam) {
    state = adam_update(std::move(state), record.direction, config.learning_rate, config.beta1,
                        config.beta2, config.epsilon);
  } else {
    state = sgd_update(std::move(state), record.direction, config.learning_rate, config.momentum);
  }

  if (config.lm_schedule) {
    const double new_loss = network.evaluate(state.theta, batch).loss;
    const DenseVector step = state.theta - theta_before;
    const auto curvature = [&](const DenseVector& v) {
      return network.ggn_vector_product(theta_before, batch, v, 0.0);
    };
    try {
      const double rho = reduction_ratio(new_loss, gradient.loss, gradient.gradient, curvature, step);
      state.damping = lm_update(rho, state.damping, config.lm_schedule->a, config.lm_schedule->alpha);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateModel) throw;
      record.lm_skipped = true;
    }
  }

  state.previous_estimate = record.direction;
  ++state.iteration;
  record.damping = state.damping;
  return record;
}

SeedStreams SeedStreams::from_seed(std::uint64_t seed) {
  const numerics::RngStream root(seed);
  return {root.split(1), root.split(2), root.split(3)};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, numerics::RngStream& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

curvature::Batch gather(const curvature::Batch& source, std::span<const std::size_t> indices) {
  curvature::Batch out;
  const auto b = static_cast<Eigen::Index>(indices.size());
  out.inputs.resize(b, source.inputs.cols());
  if (source.targets.size() > 0) out.targets.resize(b, source.targets.cols());
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]);
    out.inputs.row(r) = source.inputs.row(i);
    if (source.targets.size() > 0) out.targets.row(r) = source.targets.row(i);
    if (!source.labels.empty()) out.labels.push_back(source.labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

TrainHistory train(const curvature::Network& network, const curvature::Batch& train_set,
                   const curvature::Batch& test_set, const OptimizerConfig& config,
                   const TrainSettings& settings, std::uint64_t seed) {
  config.validate();
  const auto n = static_cast<std::size_t>(train_set.size());
  require(n > 0, ErrorCode::InvalidArgument, "training set is empty");
  require(settings.batch_size >= 1 && settings.batch_size <= n, ErrorCode::InvalidArgument,
          "batch size must lie in [1, training-set size]");

  auto streams = SeedStreams::from_seed(seed);
  TrainState state = TrainState::initial(network.init_parameters(streams.init), config, streams.noise);

  const costs::ProblemSize size{static_cast<double>(network.parameter_count()),
                                static_cast<double>(settings.batch_size),
                                static_cast<double>(network.output_dim()),
                                static_cast<double>(config.solver.cg_iterations),
                                config.solver.thermo.analog_time};
  const double per_iteration =
      costs::estimate_iteration(config.cost_kind(), size, settings.hardware).total_seconds;

  TrainHistory history;
  history.seed = seed;
  const std::size_t per_epoch = n / settings.batch_size;
  double clock = 0.0;
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    const auto order = shuffled_indices(n, streams.data);
    for (std::size_t k = 0; k < per_epoch; ++k) {
      if (settings.max_iterations > 0 && history.records.size() >= settings.max_iterations) break;
      const auto batch = gather(
          train_set, std::span(order).subspan(k * settings.batch_size, settings.batch_size));
      const auto batch_eval = network.evaluate(state.theta, batch);
      const auto step = tngd_step(state, network, batch, config);
      clock += per_iteration;
      const auto test_eval = test_set.size() > 0 ? network.evaluate(state.theta, test_set)
                                                 : curvature::Evaluation{};

      IterationRecord rec;
      rec.iteration = step.iteration;
      rec.epoch = epoch;
      rec.train_loss = step.loss;
      rec.train_accuracy = batch_eval.accuracy;
      rec.test_loss = test_eval.loss;
      rec.test_accuracy = test_eval.accuracy;
      rec.damping = step.damping;
      rec.est_wall_seconds = clock;
      history.records.push_back(rec);
    }
  }
  const auto final_eval = network.evaluate(state.theta, train_set);
  history.final_train_loss = final_eval.loss;
  history.final_train_accuracy = final_eval.accuracy;
  history.final_theta = std::move(state.theta);
  return history;
}

}  // namespace tngd::optim
