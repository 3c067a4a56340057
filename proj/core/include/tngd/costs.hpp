#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace tngd::costs {

enum class OptimizerKind { Sgd, Adam, Ngd, NgdCg, NgdWoodbury, Tngd };

[[nodiscard]] std::string_view to_string(OptimizerKind kind) noexcept;

/// Hardware and host-throughput constants.
///
/// The transfer and analog constants are the device assumptions (16-bit values,
/// 50 Gb/s link, RC = 1 us). The three digital coefficients are host-specific;
/// the defaults are representative single-core figures and calibrate() refits
/// them from measured timings.
struct HardwareAssumptions {
  double bits_per_value = 16.0;
  double transfer_rate_bits_per_sec = 50e9;
  double rc_seconds = 1e-6;
  double seconds_per_model_unit = 2e-9;   // one sample x one parameter in a model pass
  double seconds_per_flop = 2.5e-10;      // dense multiply-add
  double seconds_per_factor_flop = 5e-10; // Cholesky / LU multiply-add

  void validate() const;
};

struct ProblemSize {
  double parameters = 0.0;  // N
  double batch = 0.0;       // b
  double outputs = 0.0;     // d_z
  double cg_iterations = 200.0;
  double analog_time = 50.0;  // units of tau
};

struct TimingEstimate {
  double build_seconds = 0.0;
  double transfer_seconds = 0.0;
  double analog_seconds = 0.0;
  double total_seconds = 0.0;
  double memory_bytes = 0.0;
};

/// Values moved per TNGD iteration: b*d_z(b*d_z + 2N) resistor settings and N
/// gradient values uploaded, N solution values read back.
[[nodiscard]] double tngd_transfer_values(const ProblemSize& size);
[[nodiscard]] double transfer_seconds(double values, const HardwareAssumptions& hw);

/// Per-iteration runtime/memory estimate following the asymptotic cost of each
/// optimizer, with the host coefficients in `hw`.
[[nodiscard]] TimingEstimate estimate_iteration(OptimizerKind kind, const ProblemSize& size,
                                                const HardwareAssumptions& hw = {});

struct KernelTiming {
  double size = 0.0;
  double seconds = 0.0;
};

struct KernelFit {
  double coefficient = 0.0;  // seconds per unit of nominal work
  double exponent = 0.0;     // log-log slope of seconds against size
  double residual = 0.0;     // RMS of seconds - coefficient * work
};

/// Nominal work functions: a model pass is linear in its size (samples x
/// parameters); dense matmul is size^3; factorization is size^3 / 3.
enum class Kernel { ModelPass, Matmul, Factorization };

[[nodiscard]] double nominal_work(Kernel kernel, double size);

/// Least-squares coefficient through the origin plus a log-log exponent.
/// Throws InsufficientData for fewer than three points.
[[nodiscard]] KernelFit fit_kernel(Kernel kernel, std::span<const KernelTiming> timings);

struct KernelMeasurements {
  std::vector<KernelTiming> model_pass;
  std::vector<KernelTiming> matmul;
  std::vector<KernelTiming> factorization;
};

struct Calibration {
  HardwareAssumptions hardware;
  KernelFit model_pass;
  KernelFit matmul;
  KernelFit factorization;
};

[[nodiscard]] Calibration calibrate(const KernelMeasurements& measurements,
                                    HardwareAssumptions base = {});

/// Times the three kernels on this host at the given sizes.
[[nodiscard]] KernelMeasurements measure_host(std::span<const std::size_t> model_sizes,
                                              std::span<const std::size_t> dense_sizes);

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tngd::costs
