#include "tngd/curvature.hpp"

#include <cmath>
#include <string>

#include "tngd/error.hpp"

namespace tngd::curvature {

namespace {

using ConstMatrixMap = Eigen::Map<const DenseMatrix>;
using MatrixMap = Eigen::Map<DenseMatrix>;

DenseMatrix activate(Activation act, const DenseMatrix& z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Relu: return z.cwiseMax(0.0);
  }
  return z;
}

// Elementwise derivative of the activation, given pre- and post-activation values.
DenseMatrix activation_slope(Activation act, const DenseMatrix& z, const DenseMatrix& a) {
  switch (act) {
    case Activation::Identity: return DenseMatrix::Ones(z.rows(), z.cols());
    case Activation::Tanh: return (1.0 - a.array().square()).matrix();
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
  }
  return DenseMatrix::Ones(z.rows(), z.cols());
}

DenseVector softmax(const DenseVector& z) {
  const double peak = z.maxCoeff();
  DenseVector e = (z.array() - peak).exp().matrix();
  return e / e.sum();
}

double log_sum_exp(const DenseVector& z) {
  const double peak = z.maxCoeff();
  return peak + std::log((z.array() - peak).exp().sum());
}

}  // namespace

struct Network::Trace {
  std::vector<DenseMatrix> pre;   // per layer, b x out
  std::vector<DenseMatrix> post;  // post[0] = inputs, post[l + 1] = act(pre[l])
  std::vector<DenseMatrix> slope;
};

void ModelSpec::validate() const {
  require(!layers.empty(), ErrorCode::InvalidArgument, "model needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(layers[l].input_dim > 0 && layers[l].output_dim > 0, ErrorCode::InvalidArgument,
            "layer " + std::to_string(l) + " has a zero dimension");
    if (l > 0) {
      require(layers[l].input_dim == layers[l - 1].output_dim, ErrorCode::DimensionMismatch,
              "layer " + std::to_string(l) + " input does not chain with the previous output");
    }
  }
}

Eigen::Index ModelSpec::input_dim() const { return layers.empty() ? 0 : layers.front().input_dim; }
Eigen::Index ModelSpec::output_dim() const { return layers.empty() ? 0 : layers.back().output_dim; }

Eigen::Index ModelSpec::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers) n += layer.input_dim * layer.output_dim + layer.output_dim;
  return n;
}

Network::Network(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Eigen::Index offset = 0;
  for (const auto& layer : spec_.layers) {
    offsets_.push_back(offset);
    offset += layer.input_dim * layer.output_dim + layer.output_dim;
  }
  parameter_count_ = offset;
}

DenseVector Network::init_parameters(numerics::RngStream& rng) const {
  DenseVector theta = DenseVector::Zero(parameter_count_);
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const auto& layer = spec_.layers[l];
    const double sd = 1.0 / std::sqrt(static_cast<double>(layer.input_dim));
    for (Eigen::Index k = 0; k < layer.input_dim * layer.output_dim; ++k) {
      theta[offsets_[l] + k] = sd * rng.normal();
    }
  }
  return theta;
}

void Network::check(const DenseVector& theta, const Batch& batch) const {
  require(theta.size() == parameter_count_, ErrorCode::DimensionMismatch,
          "parameter vector has length " + std::to_string(theta.size()) + ", model needs " +
              std::to_string(parameter_count_));
  require(batch.size() >= 1, ErrorCode::InvalidArgument, "empty batch");
  require(batch.inputs.cols() == spec_.input_dim(), ErrorCode::DimensionMismatch,
          "batch inputs have " + std::to_string(batch.inputs.cols()) + " features, model expects " +
              std::to_string(spec_.input_dim()));
  const auto b = static_cast<std::size_t>(batch.size());
  if (spec_.loss == LossHead::SoftmaxCrossEntropy) {
    require(batch.labels.size() == b, ErrorCode::DimensionMismatch, "label count vs batch size");
    for (auto y : batch.labels) {
      require(y < static_cast<std::size_t>(output_dim()), ErrorCode::InvalidArgument,
              "class index " + std::to_string(y) + " out of range");
    }
  } else {
    require(batch.targets.rows() == batch.size() && batch.targets.cols() == output_dim(),
            ErrorCode::DimensionMismatch, "regression targets must be b x d_z");
  }
}

Network::Trace Network::run_forward(const DenseVector& theta, const DenseMatrix& inputs) const {
  Trace trace;
  trace.post.push_back(inputs);
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const auto& layer = spec_.layers[l];
    const ConstMatrixMap weights(theta.data() + offsets_[l], layer.output_dim, layer.input_dim);
    const auto bias =
        theta.segment(offsets_[l] + layer.output_dim * layer.input_dim, layer.output_dim);
    DenseMatrix z = trace.post.back() * weights.transpose();
    z.rowwise() += bias.transpose();
    DenseMatrix a = activate(layer.activation, z);
    trace.slope.push_back(activation_slope(layer.activation, z, a));
    trace.pre.push_back(std::move(z));
    trace.post.push_back(std::move(a));
  }
  return trace;
}

DenseVector Network::forward(const DenseVector& theta, const DenseVector& x) const {
  require(theta.size() == parameter_count_, ErrorCode::DimensionMismatch,
          "forward: parameter vector length");
  require(x.size() == spec_.input_dim(), ErrorCode::DimensionMismatch, "forward: input length");
  ++calls_.forward_passes;
  return run_forward(theta, DenseMatrix(x.transpose())).post.back().row(0).transpose();
}

DenseMatrix Network::forward_batch(const DenseVector& theta, const DenseMatrix& inputs) const {
  require(theta.size() == parameter_count_, ErrorCode::DimensionMismatch,
          "forward: parameter vector length");
  require(inputs.cols() == spec_.input_dim(), ErrorCode::DimensionMismatch, "forward: input width");
  ++calls_.forward_passes;
  return run_forward(theta, inputs).post.back();
}

DenseMatrix Network::output_cotangent(const DenseMatrix& outputs, const Batch& batch) const {
  DenseMatrix cot(outputs.rows(), outputs.cols());
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    const DenseVector z = outputs.row(i).transpose();
    if (spec_.loss == LossHead::SoftmaxCrossEntropy) {
      DenseVector p = softmax(z);
      p[static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(i)])] -= 1.0;
      cot.row(i) = p.transpose();
    } else {
      cot.row(i) = (z - batch.targets.row(i).transpose()).transpose();
    }
  }
  return cot;
}

DenseVector Network::reverse(const DenseVector& theta, const Trace& trace,
                             const DenseMatrix& cotangent) const {
  DenseVector grad = DenseVector::Zero(parameter_count_);
  DenseMatrix delta = cotangent;
  for (std::size_t l = spec_.layers.size(); l-- > 0;) {
    const auto& layer = spec_.layers[l];
    const DenseMatrix dz = delta.cwiseProduct(trace.slope[l]);
    MatrixMap(grad.data() + offsets_[l], layer.output_dim, layer.input_dim) =
        dz.transpose() * trace.post[l];
    grad.segment(offsets_[l] + layer.output_dim * layer.input_dim, layer.output_dim) =
        dz.colwise().sum().transpose();
    if (l > 0) {
      const ConstMatrixMap weights(theta.data() + offsets_[l], layer.output_dim, layer.input_dim);
      delta = dz * weights;
    }
  }
  return grad;
}

DenseMatrix Network::jvp(const DenseVector& theta, const Trace& trace, const DenseVector& v) const {
  DenseMatrix tangent = DenseMatrix::Zero(trace.post[0].rows(), trace.post[0].cols());
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const auto& layer = spec_.layers[l];
    const Eigen::Index weight_count = layer.output_dim * layer.input_dim;
    const ConstMatrixMap weights(theta.data() + offsets_[l], layer.output_dim, layer.input_dim);
    const ConstMatrixMap dweights(v.data() + offsets_[l], layer.output_dim, layer.input_dim);
    const auto dbias = v.segment(offsets_[l] + weight_count, layer.output_dim);
    DenseMatrix dz = trace.post[l] * dweights.transpose();
    if (l > 0) dz.noalias() += tangent * weights.transpose();
    dz.rowwise() += dbias.transpose();
    tangent = dz.cwiseProduct(trace.slope[l]);
  }
  return tangent;
}

DenseVector Network::apply_loss_hessian(const DenseVector& z, const DenseVector& u) const {
  if (spec_.loss == LossHead::MeanSquaredError) return u;
  const DenseVector p = softmax(z);
  return p.cwiseProduct(u) - p * p.dot(u);
}

LossGradient Network::loss_and_gradient(const DenseVector& theta, const Batch& batch) const {
  check(theta, batch);
  ++calls_.gradient_passes;
  const Trace trace = run_forward(theta, batch.inputs);
  const DenseMatrix& outputs = trace.post.back();
  const double b = static_cast<double>(batch.size());

  double total = 0.0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    const DenseVector z = outputs.row(i).transpose();
    if (spec_.loss == LossHead::SoftmaxCrossEntropy) {
      total += log_sum_exp(z) - z[static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(i)])];
    } else {
      total += 0.5 * (z - batch.targets.row(i).transpose()).squaredNorm();
    }
  }
  return {total / b, reverse(theta, trace, output_cotangent(outputs, batch)) / b};
}

Evaluation Network::evaluate(const DenseVector& theta, const Batch& batch) const {
  check(theta, batch);
  ++calls_.forward_passes;
  const DenseMatrix outputs = run_forward(theta, batch.inputs).post.back();
  double total = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    const DenseVector z = outputs.row(i).transpose();
    if (spec_.loss == LossHead::SoftmaxCrossEntropy) {
      const auto y = static_cast<Eigen::Index>(batch.labels[static_cast<std::size_t>(i)]);
      total += log_sum_exp(z) - z[y];
      Eigen::Index best = 0;
      z.maxCoeff(&best);
      if (best == y) ++correct;
    } else {
      total += 0.5 * (z - batch.targets.row(i).transpose()).squaredNorm();
    }
  }
  const double b = static_cast<double>(batch.size());
  const double accuracy =
      spec_.loss == LossHead::SoftmaxCrossEntropy ? static_cast<double>(correct) / b : 0.0;
  return {total / b, accuracy};
}

DenseMatrix Network::jacobian(const DenseVector& theta, const Batch& batch) const {
  check(theta, batch);
  const Trace trace = run_forward(theta, batch.inputs);
  const Eigen::Index dz = output_dim();
  const Eigen::Index b = batch.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(b));
  calls_.jacobian_rows += static_cast<std::size_t>(b * dz);

  DenseMatrix jac = DenseMatrix::Zero(b * dz, parameter_count_);
  for (Eigen::Index i = 0; i < b; ++i) {
    // Reverse pass for sample i seeded with every output direction at once.
    DenseMatrix delta = DenseMatrix::Identity(dz, dz);
    for (std::size_t l = spec_.layers.size(); l-- > 0;) {
      const auto& layer = spec_.layers[l];
      const DenseMatrix d = delta * trace.slope[l].row(i).asDiagonal();
      for (Eigen::Index j = 0; j < dz; ++j) {
        double* row = jac.row(i * dz + j).data();
        MatrixMap(row + offsets_[l], layer.output_dim, layer.input_dim) =
            d.row(j).transpose() * trace.post[l].row(i);
        Eigen::Map<DenseVector>(row + offsets_[l] + layer.output_dim * layer.input_dim,
                                layer.output_dim) = d.row(j).transpose();
      }
      if (l > 0) {
        const ConstMatrixMap weights(theta.data() + offsets_[l], layer.output_dim, layer.input_dim);
        delta = d * weights;
      }
    }
  }
  return jac * scale;
}

DenseMatrix Network::loss_hessian(const DenseVector& theta, const Batch& batch) const {
  check(theta, batch);
  const Eigen::Index dz = output_dim();
  const Eigen::Index b = batch.size();
  DenseMatrix h = DenseMatrix::Zero(b * dz, b * dz);
  if (spec_.loss == LossHead::MeanSquaredError) {
    h.setIdentity();
    return h;
  }
  ++calls_.forward_passes;
  const DenseMatrix outputs = run_forward(theta, batch.inputs).post.back();
  for (Eigen::Index i = 0; i < b; ++i) {
    const DenseVector p = softmax(outputs.row(i).transpose());
    DenseMatrix block = -p * p.transpose();
    block.diagonal() += p;
    h.block(i * dz, i * dz, dz, dz) = block;
  }
  return h;
}

DenseVector Network::ggn_vector_product(const DenseVector& theta, const Batch& batch,
                                        const DenseVector& v, double damping) const {
  check(theta, batch);
  require(v.size() == parameter_count_, ErrorCode::DimensionMismatch,
          "ggn_vector_product: vector length " + std::to_string(v.size()));
  ++calls_.jvp_passes;
  ++calls_.vjp_passes;
  const Trace trace = run_forward(theta, batch.inputs);
  const DenseMatrix& outputs = trace.post.back();
  const DenseMatrix tangent = jvp(theta, trace, v);
  DenseMatrix seed(tangent.rows(), tangent.cols());
  for (Eigen::Index i = 0; i < tangent.rows(); ++i) {
    seed.row(i) = apply_loss_hessian(outputs.row(i).transpose(), tangent.row(i).transpose()).transpose();
  }
  DenseVector out = reverse(theta, trace, seed) / static_cast<double>(batch.size());
  out += damping * v;
  return out;
}

DenseMatrix Network::build_ggn(const DenseVector& theta, const Batch& batch, double damping) const {
  require(parameter_count_ <= kMaxExplicitParameters, ErrorCode::TooLarge,
          "explicit GGN needs N <= " + std::to_string(kMaxExplicitParameters));
  return damped_system(theta, batch, damping, DenseVector::Zero(parameter_count_)).explicit_matrix();
}

DenseMatrix Network::empirical_fisher(const DenseVector& theta, const Batch& batch) const {
  check(theta, batch);
  require(parameter_count_ <= kMaxExplicitParameters, ErrorCode::TooLarge,
          "empirical Fisher needs N <= " + std::to_string(kMaxExplicitParameters));
  const Trace trace = run_forward(theta, batch.inputs);
  const DenseMatrix cot = output_cotangent(trace.post.back(), batch);
  const Eigen::Index b = batch.size();
  calls_.gradient_passes += static_cast<std::size_t>(b);

  // Row i holds the loss gradient of sample i.
  DenseMatrix per_sample = DenseMatrix::Zero(b, parameter_count_);
  for (Eigen::Index i = 0; i < b; ++i) {
    DenseMatrix delta = cot.row(i);
    for (std::size_t l = spec_.layers.size(); l-- > 0;) {
      const auto& layer = spec_.layers[l];
      const DenseMatrix d = delta * trace.slope[l].row(i).asDiagonal();
      double* row = per_sample.row(i).data();
      MatrixMap(row + offsets_[l], layer.output_dim, layer.input_dim) =
          d.row(0).transpose() * trace.post[l].row(i);
      Eigen::Map<DenseVector>(row + offsets_[l] + layer.output_dim * layer.input_dim,
                              layer.output_dim) = d.row(0).transpose();
      if (l > 0) {
        const ConstMatrixMap weights(theta.data() + offsets_[l], layer.output_dim, layer.input_dim);
        delta = d * weights;
      }
    }
  }
  return numerics::symmetrized(per_sample.transpose() * per_sample / static_cast<double>(b));
}

thermo::DampedLowRankSystem Network::damped_system(const DenseVector& theta, const Batch& batch,
                                                   double damping, const DenseVector& rhs) const {
  require(rhs.size() == parameter_count_, ErrorCode::DimensionMismatch,
          "damped_system: rhs length");
  thermo::DampedLowRankSystem system;
  system.jacobian = jacobian(theta, batch);
  system.loss_hessian = loss_hessian(theta, batch);
  system.damping = damping;
  system.rhs = rhs;
  system.block_size = output_dim();
  return system;
}

}  // namespace tngd::curvature
