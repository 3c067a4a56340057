#include "tngd/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tngd/error.hpp"

namespace tngd::circuit {

namespace {

double max_abs(const DenseMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
double max_abs(const DenseVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double pick_scale(double peak, const CircuitConfig& config) {
  if (!config.auto_scale || peak == 0.0) return 1.0;
  return peak / config.full_scale;
}

template <typename M>
M quantized(const M& values, double scale, int bits, double full_scale) {
  M out(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out.data()[i] = scale * quantize(values.data()[i] / scale, bits, full_scale);
  }
  return out;
}

}  // namespace

void ResistorArray::validate() const {
  const auto positive_finite = [](const auto& m) {
    return m.size() > 0 && m.allFinite() && (m.array() > 0.0).all();
  };
  require(positive_finite(resistances) && positive_finite(input_resistances) &&
              positive_finite(capacitances),
          ErrorCode::InvalidArgument, "resistances and capacitances must be positive and finite");
  require(resistances.rows() == resistances.cols(), ErrorCode::DimensionMismatch,
          "single-array dynamics need a square resistor array");
  require(input_resistances.size() == resistances.rows() &&
              capacitances.size() == resistances.rows(),
          ErrorCode::DimensionMismatch, "one input resistor and capacitor per node");
}

DenseMatrix ResistorArray::conductance() const {
  return resistances.transpose().cwiseInverse();
}

DenseVector conductance_dynamics_step(const DenseVector& voltages, const ResistorArray& array,
                                      const DenseVector& input_voltages, double dt,
                                      double noise_variance, RngStream& rng) {
  array.validate();
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
  require(noise_variance >= 0.0, ErrorCode::InvalidArgument, "noise variance must be nonnegative");
  const Eigen::Index n = array.resistances.rows();
  require(voltages.size() == n && input_voltages.size() == n, ErrorCode::DimensionMismatch,
          "voltage vectors must match the array size");

  const DenseMatrix g = array.conductance();
  const double noise_scale = std::sqrt(2.0 * noise_variance * dt);
  DenseVector next(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double current = input_voltages[i] / array.input_resistances[i];
    for (Eigen::Index j = 0; j < n; ++j) current -= g(i, j) * voltages[j];
    next[i] = voltages[i] + dt * current / array.capacitances[i];
  }
  if (noise_scale > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) next[i] += noise_scale * rng.normal() / array.capacitances[i];
  }
  require(next.allFinite(), ErrorCode::NonFinite, "circuit voltages diverged");
  return next;
}

void CircuitConfig::validate() const {
  require(dac_bits >= 1 && adc_bits >= 1 && resistor_bits >= 1 && dac_bits <= 52 &&
              adc_bits <= 52 && resistor_bits <= 52,
          ErrorCode::InvalidArgument, "bit depths must lie in [1, 52]");
  require(rc_seconds > 0.0 && transfer_rate_bits_per_sec > 0.0, ErrorCode::InvalidArgument,
          "RC and transfer rate must be positive");
  require(full_scale > 0.0, ErrorCode::InvalidArgument, "full scale must be positive");
  require(noise_variance >= 0.0, ErrorCode::InvalidArgument, "noise variance must be nonnegative");
  require(step_size > 0.0, ErrorCode::InvalidArgument, "step size must be positive");
  require(averaging_window > 0.0 && averaging_window <= 1.0, ErrorCode::InvalidArgument,
          "averaging window must lie in (0, 1]");
}

double quantize(double value, int bits, double full_scale) {
  require(std::isfinite(value), ErrorCode::NonFinite, "cannot quantize a non-finite value");
  if (std::abs(value) > full_scale) {
    fail(ErrorCode::Overflow, "value " + std::to_string(value) + " exceeds full scale " +
                                  std::to_string(full_scale) + "; rescale before programming");
  }
  const double levels = std::ldexp(1.0, bits - 1);
  const double step = full_scale / levels;
  const double code = std::clamp(std::nearbyint(value / step), -levels, levels);
  return code * step;
}

std::size_t SpuProgram::resistor_count() const {
  return static_cast<std::size_t>(jacobian_array.size() + hessian_array.size() +
                                  jacobian_transpose_array.size());
}

thermo::DampedLowRankSystem SpuProgram::quantized_system() const {
  thermo::DampedLowRankSystem s;
  s.jacobian = jacobian_array;
  s.loss_hessian = hessian_array;
  s.damping = damping;
  s.rhs = input_voltages;
  s.block_size = block_size;
  return s;
}

SpuProgram program_spu(const thermo::DampedLowRankSystem& system, const CircuitConfig& config) {
  config.validate();
  system.validate();

  SpuProgram program;
  program.jacobian_scale = pick_scale(max_abs(system.jacobian), config);
  program.hessian_scale = pick_scale(max_abs(system.loss_hessian), config);
  program.input_scale = pick_scale(max_abs(system.rhs), config);
  program.block_size = system.block_size;

  program.jacobian_array =
      quantized(system.jacobian, program.jacobian_scale, config.resistor_bits, config.full_scale);
  program.hessian_array =
      quantized(system.loss_hessian, program.hessian_scale, config.resistor_bits, config.full_scale);
  // The third array is programmed from the same digital values as the first.
  program.jacobian_transpose_array = program.jacobian_array.transpose();
  // Damping is an extra diagonal conductance programmed at its own full scale.
  const double damping_scale = system.damping > 0.0 ? system.damping / config.full_scale : 1.0;
  program.damping =
      damping_scale * quantize(system.damping / damping_scale, config.resistor_bits, config.full_scale);
  program.input_voltages =
      quantized(system.rhs, program.input_scale, config.dac_bits, config.full_scale);
  return program;
}

SpuReadout run_spu(const SpuProgram& program, const CircuitConfig& config, double duration,
                   RngStream rng, std::optional<DenseVector> initial) {
  config.validate();
  require(duration >= 0.0, ErrorCode::InvalidArgument, "duration must be nonnegative");
  const Eigen::Index n = program.jacobian_array.cols();
  const Eigen::Index rows = program.jacobian_array.rows();
  require(program.hessian_array.rows() == rows && program.hessian_array.cols() == rows &&
              program.jacobian_transpose_array.rows() == n &&
              program.jacobian_transpose_array.cols() == rows && program.input_voltages.size() == n,
          ErrorCode::DimensionMismatch, "SPU arrays have inconsistent shapes");

  DenseVector v = initial ? std::move(*initial) : program.input_voltages;
  require(v.size() == n, ErrorCode::DimensionMismatch, "initial voltages vs node count");

  thermo::TlsConfig timing;
  timing.step_size = config.step_size;
  timing.analog_time = duration;
  timing.averaging_window = config.averaging_window;
  timing.validate();
  const std::size_t steps = timing.step_count();
  const std::size_t window =
      steps == 0 ? 0
                 : std::clamp<std::size_t>(
                       static_cast<std::size_t>(std::ceil(config.averaging_window *
                                                          static_cast<double>(steps) - 1e-9)),
                       1, steps);

  const double dt = config.step_size;
  const double noise_scale = std::sqrt(2.0 * config.noise_variance * dt);
  const Eigen::Index block = program.block_size > 0 ? program.block_size : rows;
  DenseVector first(rows), second(rows), sum = DenseVector::Zero(n);

  for (std::size_t k = 0; k < steps; ++k) {
    // Array 1: currents J V into the b*d_z intermediate nodes (no capacitors).
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) acc += program.jacobian_array(r, c) * v[c];
      first[r] = acc;
    }
    // Array 2: H_L within each per-sample block.
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index start = (r / block) * block;
      double acc = 0.0;
      for (Eigen::Index c = start; c < start + block; ++c) acc += program.hessian_array(r, c) * first[c];
      second[r] = acc;
    }
    // Array 3 feeds J^T back into the integrating nodes together with damping and input.
    for (Eigen::Index i = 0; i < n; ++i) {
      double feedback = 0.0;
      for (Eigen::Index r = 0; r < rows; ++r) feedback += program.jacobian_transpose_array(i, r) * second[r];
      const double drift = feedback + program.damping * v[i] - program.input_voltages[i];
      v[i] -= dt * drift;
    }
    if (noise_scale > 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) v[i] += noise_scale * rng.normal();
    }
    require(v.allFinite(), ErrorCode::NonFinite, "SPU node voltages diverged");
    if (k >= steps - window) sum += v;
  }

  SpuReadout out;
  out.steps = steps;
  out.pre_adc = steps == 0 ? v : DenseVector(sum / static_cast<double>(window));
  out.final_voltages = v;
  out.elapsed_seconds = static_cast<double>(steps) * dt * config.rc_seconds;
  const double adc_scale = pick_scale(max_abs(out.pre_adc), config);
  out.output = quantized(out.pre_adc, adc_scale, config.adc_bits, config.full_scale);
  return out;
}

}  // namespace tngd::circuit
