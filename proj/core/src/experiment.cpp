#include "tngd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "tngd/error.hpp"

namespace tngd::bench {

namespace {

// Runs task(i) for i in [0, count) on a small pool; rethrows the first failure.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

bool uses_device(const optim::OptimizerConfig& o) {
  return o.gradient_source == optim::GradientSource::NaturalGradient &&
         o.solver.kind == second_order::SolverKind::Thermodynamic;
}

}  // namespace

std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::filesystem::path& output_root) {
  std::filesystem::path dir = config.output_dir;
  if (dir.is_relative() && !output_root.empty()) dir = output_root / dir;
  return dir / config.name;
}

RunResult run(const ExperimentConfig& config, const std::filesystem::path& directory, unsigned workers) {
  config.validate();
  const DataSplit data = materialize(config.dataset, config.base_dir);
  require(config.training.batch_size <= static_cast<std::size_t>(data.train.size()),
          ErrorCode::ConfigError, "batch_size exceeds the training set size");
  const curvature::Network prototype(model_for(config.model, data.train));

  std::filesystem::create_directories(directory);
  write_text(directory / "config.json", sidecar_json(config));

  RunResult result;
  result.directory = directory;
  result.histories.resize(config.seeds.size());
  result.logs.resize(config.seeds.size());
  parallel_for(config.seeds.size(), workers, [&](std::size_t i) {
    const curvature::Network network = prototype;
    const std::uint64_t seed = config.seeds[i];
    result.histories[i] = optim::train(network, data.train.samples, data.test.samples,
                                       config.optimizer, config.training, seed);
    result.logs[i] = directory / ("seed_" + std::to_string(seed) + ".csv");
    write_log(result.logs[i], to_rows(result.histories[i], config.optimizer));
  });
  return result;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "t") return SweepAxis::AnalogTime;
  if (name == "t_d") return SweepAxis::DelayTime;
  if (name == "kappa0") return SweepAxis::Kappa0;
  if (name == "lambda") return SweepAxis::Lambda;
  if (name == "eta") return SweepAxis::Eta;
  fail(ErrorCode::ConfigError, "unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::AnalogTime: return "t";
    case SweepAxis::DelayTime: return "t_d";
    case SweepAxis::Kappa0: return "kappa0";
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::Eta: return "eta";
  }
  return "unknown";
}

ExperimentConfig with_axis_value(ExperimentConfig config, SweepAxis axis, double value) {
  auto& o = config.optimizer;
  switch (axis) {
    case SweepAxis::AnalogTime:
      require(uses_device(o), ErrorCode::ConfigError, "axis t needs the thermodynamic solver");
      o.solver.thermo.analog_time = value;
      break;
    case SweepAxis::DelayTime:
      require(uses_device(o), ErrorCode::ConfigError, "axis t_d needs the thermodynamic solver");
      o.delay_time = value;
      break;
    case SweepAxis::Kappa0:
      require(uses_device(o), ErrorCode::ConfigError, "axis kappa0 needs the thermodynamic solver");
      o.solver.thermo.noise_variance = value;
      break;
    case SweepAxis::Lambda:
      require(o.gradient_source == optim::GradientSource::NaturalGradient, ErrorCode::ConfigError,
              "axis lambda needs a natural-gradient optimizer");
      o.damping = value;
      break;
    case SweepAxis::Eta:
      o.learning_rate = value;
      break;
  }
  return config;
}

std::vector<RunResult> sweep(const ExperimentConfig& config, SweepAxis axis,
                             std::span<const double> values, const std::filesystem::path& directory,
                             unsigned workers) {
  require(!values.empty(), ErrorCode::ConfigError, "sweep needs at least one value");
  std::vector<ExperimentConfig> points;
  for (const double v : values) {
    points.push_back(with_axis_value(config, axis, v));
    points.back().validate();
  }
  std::vector<RunResult> results;
  results.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto sub = directory / (std::string(to_string(axis)) + "=" + format_number(values[i]));
    results.push_back(run(points[i], sub, workers));
  }
  return results;
}

}  // namespace tngd::bench
