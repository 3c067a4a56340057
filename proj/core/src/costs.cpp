#include "tngd/costs.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <numeric>

#include "tngd/error.hpp"
#include "tngd/numerics.hpp"

namespace tngd::costs {

namespace {
constexpr double kBytesPerValue = 8.0;
}

std::string_view to_string(OptimizerKind kind) noexcept {
  switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Ngd: return "ngd";
    case OptimizerKind::NgdCg: return "ngd-cg";
    case OptimizerKind::NgdWoodbury: return "ngd-woodbury";
    case OptimizerKind::Tngd: return "tngd";
  }
  return "unknown";
}

void HardwareAssumptions::validate() const {
  require(bits_per_value > 0 && transfer_rate_bits_per_sec > 0 && rc_seconds > 0 &&
              seconds_per_model_unit > 0 && seconds_per_flop > 0 && seconds_per_factor_flop > 0,
          ErrorCode::InvalidArgument, "hardware assumptions must all be positive");
}

double tngd_transfer_values(const ProblemSize& size) {
  const double rows = size.batch * size.outputs;
  return rows * (rows + 2.0 * size.parameters) + 2.0 * size.parameters;
}

double transfer_seconds(double values, const HardwareAssumptions& hw) {
  return values * hw.bits_per_value / hw.transfer_rate_bits_per_sec;
}

TimingEstimate estimate_iteration(OptimizerKind kind, const ProblemSize& size,
                                  const HardwareAssumptions& hw) {
  hw.validate();
  require(size.parameters > 0 && size.batch > 0 && size.outputs > 0, ErrorCode::InvalidArgument,
          "problem dimensions must be positive");
  const double n = size.parameters;
  const double b = size.batch;
  const double rows = size.batch * size.outputs;
  const double pass = hw.seconds_per_model_unit * b * n;

  TimingEstimate est;
  switch (kind) {
    case OptimizerKind::Sgd:
      est.build_seconds = pass;
      est.memory_bytes = kBytesPerValue * 2.0 * n;
      break;
    case OptimizerKind::Adam:
      est.build_seconds = pass;
      est.memory_bytes = kBytesPerValue * 3.0 * n;
      break;
    case OptimizerKind::Ngd:
      est.build_seconds = hw.seconds_per_model_unit * rows * n + hw.seconds_per_flop * rows * n * n +
                          hw.seconds_per_factor_flop * n * n * n / 3.0;
      est.memory_bytes = kBytesPerValue * n * n;
      break;
    case OptimizerKind::NgdCg:
      est.build_seconds = 2.0 * size.cg_iterations * pass;
      est.memory_bytes = kBytesPerValue * 4.0 * n;
      break;
    case OptimizerKind::NgdWoodbury:
      est.build_seconds = hw.seconds_per_model_unit * rows * n +
                          hw.seconds_per_flop * rows * rows * n +
                          hw.seconds_per_factor_flop * 2.0 * rows * rows * rows / 3.0;
      est.memory_bytes = kBytesPerValue * (rows * n + rows * rows);
      break;
    case OptimizerKind::Tngd:
      est.build_seconds = hw.seconds_per_model_unit * rows * n;
      est.transfer_seconds = transfer_seconds(tngd_transfer_values(size), hw);
      est.analog_seconds = size.analog_time * hw.rc_seconds;
      est.memory_bytes = kBytesPerValue * (rows * n + rows * rows);
      break;
  }
  est.total_seconds = est.build_seconds + est.transfer_seconds + est.analog_seconds;
  return est;
}

double nominal_work(Kernel kernel, double size) {
  switch (kernel) {
    case Kernel::ModelPass: return size;
    case Kernel::Matmul: return size * size * size;
    case Kernel::Factorization: return size * size * size / 3.0;
  }
  return size;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InsufficientData,
          "log-log slope needs at least two paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, ErrorCode::InsufficientData, "log-log slope needs distinct sizes");
  return sxy / sxx;
}

KernelFit fit_kernel(Kernel kernel, std::span<const KernelTiming> timings) {
  require(timings.size() >= 3, ErrorCode::InsufficientData,
          "need at least 3 timings per kernel, got " + std::to_string(timings.size()));
  double wy = 0.0, ww = 0.0;
  std::vector<double> sizes, seconds;
  for (const auto& t : timings) {
    require(t.size > 0 && t.seconds > 0, ErrorCode::InvalidArgument,
            "kernel timings must be positive");
    const double w = nominal_work(kernel, t.size);
    wy += w * t.seconds;
    ww += w * w;
    sizes.push_back(t.size);
    seconds.push_back(t.seconds);
  }
  KernelFit fit;
  fit.coefficient = wy / ww;
  double sq = 0.0;
  for (const auto& t : timings) {
    const double r = t.seconds - fit.coefficient * nominal_work(kernel, t.size);
    sq += r * r;
  }
  fit.residual = std::sqrt(sq / static_cast<double>(timings.size()));
  fit.exponent = log_log_slope(sizes, seconds);
  return fit;
}

Calibration calibrate(const KernelMeasurements& measurements, HardwareAssumptions base) {
  Calibration cal;
  cal.model_pass = fit_kernel(Kernel::ModelPass, measurements.model_pass);
  cal.matmul = fit_kernel(Kernel::Matmul, measurements.matmul);
  cal.factorization = fit_kernel(Kernel::Factorization, measurements.factorization);
  cal.hardware = base;
  cal.hardware.seconds_per_model_unit = cal.model_pass.coefficient;
  cal.hardware.seconds_per_flop = cal.matmul.coefficient;
  cal.hardware.seconds_per_factor_flop = cal.factorization.coefficient;
  cal.hardware.validate();
  return cal;
}

KernelMeasurements measure_host(std::span<const std::size_t> model_sizes,
                                std::span<const std::size_t> dense_sizes) {
  using Clock = std::chrono::steady_clock;
  using numerics::DenseMatrix;
  using numerics::DenseVector;
  constexpr Eigen::Index kRows = 64;

  // Best of several repetitions to suppress scheduler noise.
  auto best_of = [](int reps, auto&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
      const auto start = Clock::now();
      fn();
      best = std::min(best, std::chrono::duration<double>(Clock::now() - start).count());
    }
    return std::max(best, 1e-9);
  };

  volatile double sink = 0.0;  // keeps the factorization observable
  KernelMeasurements m;
  for (std::size_t size : model_sizes) {
    const Eigen::Index cols = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(size) / kRows);
    const DenseMatrix a = DenseMatrix::Random(kRows, cols);
    const DenseVector x = DenseVector::Random(cols);
    DenseVector y(kRows);
    const double s = best_of(5, [&] { y.noalias() = a * x; });
    m.model_pass.push_back({static_cast<double>(kRows * cols), s});
  }
  for (std::size_t size : dense_sizes) {
    const auto n = static_cast<Eigen::Index>(size);
    const DenseMatrix a = DenseMatrix::Random(n, n);
    DenseMatrix c(n, n);
    m.matmul.push_back({static_cast<double>(n), best_of(3, [&] { c.noalias() = a * a; })});
    DenseMatrix spd = a * a.transpose();
    spd.diagonal().array() += static_cast<double>(n);
    m.factorization.push_back(
        {static_cast<double>(n), best_of(3, [&] {
           const Eigen::LLT<DenseMatrix> llt(spd);
           sink = llt.matrixLLT()(n - 1, n - 1);
         })});
  }
  return m;
}

}  // namespace tngd::costs
