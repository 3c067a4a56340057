#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "tngd/experiment_config.hpp"
#include "tngd/run_log.hpp"

namespace tngd::bench {

/// Output directory for a config: relative paths are placed under
/// `output_root` when it is non-empty.
[[nodiscard]] std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                                       const std::filesystem::path& output_root);

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> logs;  // one per seed, in seed order
  std::vector<optim::TrainHistory> histories;
};

/// Trains one network per seed and writes <directory>/seed_<S>.csv plus
/// <directory>/config.json. Seeds run on up to `workers` threads (0: one per
/// hardware thread); each worker owns its network copy and RNG streams, so
/// results do not depend on scheduling.
RunResult run(const ExperimentConfig& config, const std::filesystem::path& directory,
              unsigned workers = 0);

enum class SweepAxis { AnalogTime, DelayTime, Kappa0, Lambda, Eta };

[[nodiscard]] SweepAxis parse_sweep_axis(std::string_view name);
[[nodiscard]] std::string_view to_string(SweepAxis axis) noexcept;

/// `config` with the axis knob set to `value`.
[[nodiscard]] ExperimentConfig with_axis_value(ExperimentConfig config, SweepAxis axis, double value);

/// One run per value, written to <directory>/<axis>=<value>/. All values share
/// the config's seeds and hence the same data order. t, t_d and kappa0 require
/// the thermodynamic natural-gradient optimizer; lambda requires a natural
/// gradient. Invalid combinations throw ConfigError before anything runs.
std::vector<RunResult> sweep(const ExperimentConfig& config, SweepAxis axis,
                             std::span<const double> values, const std::filesystem::path& directory,
                             unsigned workers = 0);

}  // namespace tngd::bench
