#pragma once

#include <cstddef>
#include <optional>

#include "tngd/numerics.hpp"
#include "tngd/thermo_solver.hpp"

namespace tngd::circuit {

using numerics::DenseMatrix;
using numerics::DenseVector;
using numerics::RngStream;

/// One programmable array with its input resistors and integrating capacitors.
struct ResistorArray {
  DenseMatrix resistances;         // R_ij
  DenseVector input_resistances;   // R_i
  DenseVector capacitances;        // C_i

  void validate() const;
  /// G_ij = 1 / R_ji.
  [[nodiscard]] DenseMatrix conductance() const;
};

/// Euler-Maruyama step of C dV/dt = -G V + R^{-1} V_in + I_n with noise
/// current variance 2 kappa_0.
[[nodiscard]] DenseVector conductance_dynamics_step(const DenseVector& voltages,
                                                    const ResistorArray& array,
                                                    const DenseVector& input_voltages, double dt,
                                                    double noise_variance, RngStream& rng);

struct CircuitConfig {
  int dac_bits = 16;
  int adc_bits = 16;
  int resistor_bits = 16;
  double transfer_rate_bits_per_sec = 50e9;
  double rc_seconds = 1e-6;
  double noise_variance = 0.0;
  double full_scale = 1.0;   // quantizer range is [-full_scale, full_scale]
  double step_size = 0.1;    // integration step, units of RC
  double averaging_window = 0.1;
  bool auto_scale = true;    // choose per-array scales so every value fits

  void validate() const;
};

/// Round-to-nearest uniform quantizer with step full_scale / 2^(bits-1) and
/// codes saturating at +-2^(bits-1); zero maps to zero and the error inside the
/// range is at most full_scale / 2^bits. Throws Overflow outside the range.
[[nodiscard]] double quantize(double value, int bits, double full_scale);

/// Three arrays storing J, H_L and J^T plus the damping conductance and the
/// DAC-converted gradient. Values are kept in de-scaled units (scale * code step).
struct SpuProgram {
  DenseMatrix jacobian_array;            // b*d_z x N
  DenseMatrix hessian_array;             // b*d_z x b*d_z
  DenseMatrix jacobian_transpose_array;  // N x b*d_z
  double damping = 0.0;
  DenseVector input_voltages;            // quantized gradient
  double jacobian_scale = 1.0;
  double hessian_scale = 1.0;
  double input_scale = 1.0;
  Eigen::Index block_size = 0;

  /// b*d_z (b*d_z + 2N).
  [[nodiscard]] std::size_t resistor_count() const;
  /// The damped system the programmed device actually realises.
  [[nodiscard]] thermo::DampedLowRankSystem quantized_system() const;
};

[[nodiscard]] SpuProgram program_spu(const thermo::DampedLowRankSystem& system,
                                     const CircuitConfig& config);

struct SpuReadout {
  DenseVector pre_adc;   // trailing-window average of the node voltages
  DenseVector output;    // after ADC conversion
  double elapsed_seconds = 0.0;
  std::size_t steps = 0;
  DenseVector final_voltages;
};

/// Integrates the composed dynamics dV = -(J^T H J + lambda I) V dt + g dt + noise
/// for `duration` (units of RC) from `initial` (default: the input voltages).
[[nodiscard]] SpuReadout run_spu(const SpuProgram& program, const CircuitConfig& config,
                                 double duration, RngStream rng,
                                 std::optional<DenseVector> initial = std::nullopt);

}  // namespace tngd::circuit
