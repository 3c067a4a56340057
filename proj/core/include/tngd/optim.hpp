#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tngd/costs.hpp"
#include "tngd/curvature.hpp"
#include "tngd/second_order.hpp"

namespace tngd::optim {

using numerics::DenseVector;

enum class UpdateRule { Sgd, Adam };
enum class GradientSource { RawGradient, NaturalGradient };

/// Levenberg-Marquardt damping adaptation: rho > a shrinks lambda by alpha,
/// rho < 1 - a grows it by 1/alpha.
struct LmSchedule {
  double a = 0.75;
  double alpha = 2.0 / 3.0;
};

struct OptimizerConfig {
  UpdateRule update_rule = UpdateRule::Sgd;
  double learning_rate = 0.01;
  double momentum = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  GradientSource gradient_source = GradientSource::NaturalGradient;
  second_order::SolverChoice solver;
  double damping = 0.01;
  std::optional<LmSchedule> lm_schedule;
  double delay_time = 0.0;  // units of tau

  void validate() const;
  /// Row of the cost model this configuration corresponds to.
  [[nodiscard]] costs::OptimizerKind cost_kind() const;
};

struct TrainState {
  DenseVector theta;
  std::size_t iteration = 0;
  double damping = 0.0;
  DenseVector velocity;
  DenseVector first_moment;
  DenseVector second_moment;
  std::size_t adam_steps = 0;
  DenseVector previous_estimate;
  std::optional<thermo::OuState> ou_state;
  std::optional<thermo::DampedLowRankSystem> stale_system;
  numerics::RngStream noise;

  [[nodiscard]] static TrainState initial(DenseVector theta, const OptimizerConfig& config,
                                          numerics::RngStream noise);
};

struct StepRecord {
  std::size_t iteration = 0;
  double loss = 0.0;    // batch loss before the update
  double damping = 0.0; // after any LM adjustment
  std::size_t model_calls = 0;
  double analog_seconds = 0.0;
  bool damping_escalated = false;
  bool lm_skipped = false;
  DenseVector direction;
};

/// velocity <- momentum * velocity + direction; theta <- theta - lr * velocity.
[[nodiscard]] TrainState sgd_update(TrainState state, const DenseVector& direction,
                                    double learning_rate, double momentum);

/// Bias-corrected Adam with `direction` in place of the raw gradient.
[[nodiscard]] TrainState adam_update(TrainState state, const DenseVector& direction,
                                     double learning_rate, double beta1, double beta2,
                                     double epsilon);

/// One iteration: gradient and curvature on `batch`, direction from the
/// configured source/solver, parameter update, optional LM damping update.
///
/// With the thermodynamic solver the device state persists across calls when
/// delay_time > 0 or the warm-start policy is keep-previous; with a delay the
/// first min(t_d, t) of evolution runs on the previous iteration's system.
/// A NotPositiveDefinite solve is retried once with ten times the damping.
StepRecord tngd_step(TrainState& state, const curvature::Network& network,
                     const curvature::Batch& batch, const OptimizerConfig& config);

using CurvatureProduct = std::function<DenseVector(const DenseVector&)>;

/// (new - old) / (q(p) - q(0)) with q(p) - q(0) = g^T p + p^T G p / 2.
/// Throws DegenerateModel when |q(p) - q(0)| <= 1e-12.
[[nodiscard]] double reduction_ratio(double new_loss, double old_loss, const DenseVector& gradient,
                                     const CurvatureProduct& curvature, const DenseVector& step);

inline constexpr double kMinDamping = 1e-8;
inline constexpr double kMaxDamping = 1e8;

[[nodiscard]] double lm_update(double rho, double damping, double a, double alpha);

struct TrainSettings {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::size_t max_iterations = 0;  // 0: no cap beyond epochs
  costs::HardwareAssumptions hardware;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double damping = 0.0;
  double est_wall_seconds = 0.0;  // cumulative, from the cost model
};

struct TrainHistory {
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  DenseVector final_theta;
  double final_train_loss = 0.0;  // over the full training set
  double final_train_accuracy = 0.0;
};

/// Seeded streams: the data order depends only on the seed, never on the
/// optimizer, so runs that differ in one knob see the same batches.
struct SeedStreams {
  numerics::RngStream init;
  numerics::RngStream data;
  numerics::RngStream noise;

  [[nodiscard]] static SeedStreams from_seed(std::uint64_t seed);
};

/// Epoch-shuffled mini-batch training; the trailing partial batch of an epoch
/// is dropped. Deterministic per seed.
[[nodiscard]] TrainHistory train(const curvature::Network& network, const curvature::Batch& train_set,
                                 const curvature::Batch& test_set, const OptimizerConfig& config,
                                 const TrainSettings& settings, std::uint64_t seed);

/// Rows of `source` selected by `indices`, in order.
[[nodiscard]] curvature::Batch gather(const curvature::Batch& source,
                                      std::span<const std::size_t> indices);

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
[[nodiscard]] std::vector<std::size_t> shuffled_indices(std::size_t n, numerics::RngStream& rng);

}  // namespace tngd::optim
