#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tngd/experiment_config.hpp"
#include "tngd/optim.hpp"

namespace tngd::bench {

/// One CSV row. analog_time_t, delay_td and kappa0 are the device settings
/// of the run (0 for digital optimizers).
struct LogRow {
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double lambda = 0.0;
  double est_wall_seconds = 0.0;
  double analog_time_t = 0.0;
  double delay_td = 0.0;
  double kappa0 = 0.0;
};

inline constexpr std::string_view kLogHeader =
    "seed,iteration,epoch,train_loss,test_loss,train_acc,test_acc,lambda,est_wall_seconds,"
    "analog_time_t,delay_td,kappa0";

/// Shortest round-trip decimal representation.
[[nodiscard]] std::string format_number(double value);

[[nodiscard]] std::vector<LogRow> to_rows(const optim::TrainHistory& history,
                                          const optim::OptimizerConfig& optimizer);

/// Header plus rows; every numeric field must be finite (NonFinite otherwise).
void write_log(std::ostream& out, const std::vector<LogRow>& rows);
void write_log(const std::filesystem::path& path, const std::vector<LogRow>& rows);

/// Throws MalformedLog on a header mismatch, a wrong field count, or an
/// unparsable or non-finite field.
[[nodiscard]] std::vector<LogRow> read_log(std::istream& in, std::string_view source = "<stream>");
[[nodiscard]] std::vector<LogRow> read_log(const std::filesystem::path& path);

/// Resolved configuration and library version as pretty-printed JSON.
[[nodiscard]] std::string sidecar_json(const ExperimentConfig& config);

[[nodiscard]] std::string_view library_version() noexcept;

}  // namespace tngd::bench
