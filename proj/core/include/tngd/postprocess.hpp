#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tngd/run_log.hpp"

namespace tngd::bench {

/// Trailing moving average in valid mode: output[i] averages input[i .. i+window-1],
/// so the result has n - window + 1 entries (none if window > n).
[[nodiscard]] std::vector<double> moving_average(std::span<const double> series, std::size_t window);

struct SummaryRow {
  std::size_t iteration = 0;       // last iteration in the averaging window
  double est_wall_seconds = 0.0;   // mean across seeds at that iteration
  double train_loss_mean = 0.0;
  double train_loss_std = 0.0;
  double test_loss_mean = 0.0;
  double test_loss_std = 0.0;
  double train_acc_mean = 0.0;
  double test_acc_mean = 0.0;
};

/// Smooths each seed's losses and accuracies, then takes mean and sample
/// standard deviation across seeds per iteration. Seeds are truncated to the
/// shortest log. Throws MalformedLog if a log is empty or seeds disagree on
/// the iteration sequence.
[[nodiscard]] std::vector<SummaryRow> summarize(std::span<const std::vector<LogRow>> seeds,
                                                std::size_t window);

/// First summary row whose mean smoothed train loss is <= threshold.
struct ThresholdHit {
  double threshold = 0.0;
  bool reached = false;
  std::size_t iteration = 0;
  double est_wall_seconds = 0.0;
};
[[nodiscard]] ThresholdHit time_to_threshold(std::span<const SummaryRow> summary, double threshold);

struct PostprocessResult {
  std::filesystem::path summary_csv;
  std::filesystem::path thresholds_csv;
  std::size_t runs = 0;
};

/// Finds every directory under `root` (including root) holding seed_*.csv
/// logs, and writes <root>/summary.csv and <root>/time_to_threshold.csv.
/// Thresholds default to 25/50/75% of the way from the best final to the
/// worst initial smoothed train loss across runs.
PostprocessResult postprocess(const std::filesystem::path& root, std::size_t window,
                              std::vector<double> thresholds = {});

}  // namespace tngd::bench
