#pragma once

#include <cstddef>
#include <vector>

#include "tngd/numerics.hpp"
#include "tngd/thermo_solver.hpp"

namespace tngd::curvature {

using numerics::DenseMatrix;
using numerics::DenseVector;

enum class Activation { Identity, Tanh, Relu };

// Softmax cross-entropy: L = logsumexp(z) - z_y.
// Mean squared error: L = 0.5 * ||z - y||^2 (per-sample Hessian is the identity).
enum class LossHead { SoftmaxCrossEntropy, MeanSquaredError };

struct LayerSpec {
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  Activation activation = Activation::Identity;
};

struct ModelSpec {
  std::vector<LayerSpec> layers;
  LossHead loss = LossHead::SoftmaxCrossEntropy;

  void validate() const;
  [[nodiscard]] Eigen::Index input_dim() const;
  [[nodiscard]] Eigen::Index output_dim() const;
  /// Sum over layers of in*out + out.
  [[nodiscard]] Eigen::Index parameter_count() const;
};

/// b samples. Classification heads read `labels`; regression heads read `targets` (b x d_z).
struct Batch {
  DenseMatrix inputs;
  std::vector<std::size_t> labels;
  DenseMatrix targets;

  [[nodiscard]] Eigen::Index size() const noexcept { return inputs.rows(); }
};

/// Per-network traversal counters.
///
/// model_calls() follows the "model calls" accounting of the optimizer
/// complexity table: a gradient evaluation is one call, a Jacobian costs one
/// call per row (b*d_z), a GGN-vector product costs two (one forward-mode and
/// one reverse-mode pass over the batch). Plain forward evaluations used for
/// metrics are tracked separately and not counted as model calls.
struct CallStats {
  std::size_t gradient_passes = 0;
  std::size_t jacobian_rows = 0;
  std::size_t jvp_passes = 0;
  std::size_t vjp_passes = 0;
  std::size_t forward_passes = 0;

  [[nodiscard]] std::size_t model_calls() const noexcept {
    return gradient_passes + jacobian_rows + jvp_passes + vjp_passes;
  }
};

struct LossGradient {
  double loss = 0.0;
  DenseVector gradient;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // 0 for regression heads
};

/// Dense feed-forward network over a flat parameter vector.
///
/// Parameter layout, per layer in order: weights (output_dim x input_dim,
/// row-major) followed by biases (output_dim). The ReLU derivative at 0 is 0.
/// Every method is deterministic; counters are the only mutable state.
class Network {
 public:
  explicit Network(ModelSpec spec);

  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] Eigen::Index parameter_count() const noexcept { return parameter_count_; }
  [[nodiscard]] Eigen::Index output_dim() const noexcept { return spec_.output_dim(); }

  /// LeCun-normal weights, zero biases.
  [[nodiscard]] DenseVector init_parameters(numerics::RngStream& rng) const;

  [[nodiscard]] DenseVector forward(const DenseVector& theta, const DenseVector& x) const;
  [[nodiscard]] DenseMatrix forward_batch(const DenseVector& theta, const DenseMatrix& inputs) const;

  [[nodiscard]] LossGradient loss_and_gradient(const DenseVector& theta, const Batch& batch) const;
  [[nodiscard]] Evaluation evaluate(const DenseVector& theta, const Batch& batch) const;

  /// (b*d_z x N); row i*d_z + j is dz_j(x_i)/dtheta scaled by 1/sqrt(b).
  [[nodiscard]] DenseMatrix jacobian(const DenseVector& theta, const Batch& batch) const;
  /// Block diagonal (b*d_z x b*d_z) of per-sample Hessians of L with respect to z.
  [[nodiscard]] DenseMatrix loss_hessian(const DenseVector& theta, const Batch& batch) const;
  /// J^T H (J v) + lambda v with one forward-mode and one reverse-mode pass.
  [[nodiscard]] DenseVector ggn_vector_product(const DenseVector& theta, const Batch& batch,
                                               const DenseVector& v, double damping) const;
  /// Explicit J^T H J + lambda I; throws TooLarge for N > kMaxExplicitParameters.
  [[nodiscard]] DenseMatrix build_ggn(const DenseVector& theta, const Batch& batch,
                                      double damping) const;
  /// (1/b) sum_i g_i g_i^T over per-sample loss gradients.
  [[nodiscard]] DenseMatrix empirical_fisher(const DenseVector& theta, const Batch& batch) const;

  /// Factored system for the solvers: jacobian(), loss_hessian(), damping and rhs.
  [[nodiscard]] thermo::DampedLowRankSystem damped_system(const DenseVector& theta,
                                                          const Batch& batch, double damping,
                                                          const DenseVector& rhs) const;

  [[nodiscard]] const CallStats& calls() const noexcept { return calls_; }
  void reset_calls() const noexcept { calls_ = {}; }

  static constexpr Eigen::Index kMaxExplicitParameters = 5000;

 private:
  struct Trace;

  void check(const DenseVector& theta, const Batch& batch) const;
  [[nodiscard]] Trace run_forward(const DenseVector& theta, const DenseMatrix& inputs) const;
  [[nodiscard]] DenseMatrix output_cotangent(const DenseMatrix& outputs, const Batch& batch) const;
  [[nodiscard]] DenseVector reverse(const DenseVector& theta, const Trace& trace,
                                    const DenseMatrix& cotangent) const;
  [[nodiscard]] DenseMatrix jvp(const DenseVector& theta, const Trace& trace,
                                const DenseVector& v) const;
  [[nodiscard]] DenseVector apply_loss_hessian(const DenseVector& z, const DenseVector& u) const;

  ModelSpec spec_;
  Eigen::Index parameter_count_ = 0;
  std::vector<Eigen::Index> offsets_;
  mutable CallStats calls_;
};

/// Matrix-free damped GGN operator for one (theta, batch); used by CG and the
/// reduction ratio. Holds references: the network, parameters and batch must
/// outlive it.
class GgnOperator {
 public:
  GgnOperator(const Network& network, const DenseVector& theta, const Batch& batch, double damping)
      : network_(&network), theta_(&theta), batch_(&batch), damping_(damping) {}

  [[nodiscard]] Eigen::Index dim() const noexcept { return network_->parameter_count(); }
  [[nodiscard]] double damping() const noexcept { return damping_; }
  [[nodiscard]] DenseVector apply(const DenseVector& v) const {
    return network_->ggn_vector_product(*theta_, *batch_, v, damping_);
  }

 private:
  const Network* network_;
  const DenseVector* theta_;
  const Batch* batch_;
  double damping_;
};

}  // namespace tngd::curvature
