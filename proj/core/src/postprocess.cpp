#include "tngd/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "tngd/error.hpp"

namespace tngd::bench {

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  require(window >= 1, ErrorCode::InvalidArgument, "moving-average window must be at least 1");
  if (window > series.size()) return {};
  std::vector<double> out;
  out.reserve(series.size() - window + 1);
  // Window sums are recomputed rather than updated so constant inputs stay exact.
  for (std::size_t i = 0; i + window <= series.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = i; k < i + window; ++k) sum += series[k];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

std::vector<SummaryRow> summarize(std::span<const std::vector<LogRow>> seeds, std::size_t window) {
  require(!seeds.empty(), ErrorCode::MalformedLog, "no logs to summarize");
  std::size_t length = seeds.front().size();
  for (const auto& log : seeds) {
    require(!log.empty(), ErrorCode::MalformedLog, "empty log");
    length = std::min(length, log.size());
  }
  for (const auto& log : seeds) {
    for (std::size_t i = 0; i < length; ++i) {
      require(log[i].iteration == seeds.front()[i].iteration, ErrorCode::MalformedLog,
              "seeds disagree on the iteration sequence");
    }
  }

  auto column = [&](const std::vector<LogRow>& log, double LogRow::*field) {
    std::vector<double> values(length);
    for (std::size_t i = 0; i < length; ++i) values[i] = log[i].*field;
    return moving_average(values, window);
  };
  struct Smoothed {
    std::vector<double> train_loss, test_loss, train_acc, test_acc;
  };
  std::vector<Smoothed> smoothed;
  for (const auto& log : seeds) {
    smoothed.push_back({column(log, &LogRow::train_loss), column(log, &LogRow::test_loss),
                        column(log, &LogRow::train_acc), column(log, &LogRow::test_acc)});
  }

  const std::size_t points = smoothed.front().train_loss.size();
  const double count = static_cast<double>(seeds.size());
  auto mean_std = [&](auto member, std::size_t i) {
    double sum = 0.0;
    for (const auto& s : smoothed) sum += (s.*member)[i];
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& s : smoothed) ss += ((s.*member)[i] - mean) * ((s.*member)[i] - mean);
    return std::pair{mean, seeds.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0};
  };

  std::vector<SummaryRow> rows(points);
  for (std::size_t i = 0; i < points; ++i) {
    const std::size_t last = i + window - 1;
    auto& row = rows[i];
    row.iteration = seeds.front()[last].iteration;
    double wall = 0.0;
    for (const auto& log : seeds) wall += log[last].est_wall_seconds;
    row.est_wall_seconds = wall / count;
    std::tie(row.train_loss_mean, row.train_loss_std) = mean_std(&Smoothed::train_loss, i);
    std::tie(row.test_loss_mean, row.test_loss_std) = mean_std(&Smoothed::test_loss, i);
    row.train_acc_mean = mean_std(&Smoothed::train_acc, i).first;
    row.test_acc_mean = mean_std(&Smoothed::test_acc, i).first;
  }
  return rows;
}

ThresholdHit time_to_threshold(std::span<const SummaryRow> summary, double threshold) {
  ThresholdHit hit;
  hit.threshold = threshold;
  for (const auto& row : summary) {
    if (row.train_loss_mean <= threshold) {
      hit.reached = true;
      hit.iteration = row.iteration;
      hit.est_wall_seconds = row.est_wall_seconds;
      break;
    }
  }
  return hit;
}

PostprocessResult postprocess(const std::filesystem::path& root, std::size_t window,
                              std::vector<double> thresholds) {
  namespace fs = std::filesystem;
  require(fs::is_directory(root), ErrorCode::Io, "not a directory: " + root.string());

  // Sorted by relative path so output order is independent of directory iteration order.
  std::map<std::string, std::vector<fs::path>> runs;
  auto consider = [&](const fs::directory_entry& entry) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("seed_") && name.ends_with(".csv")) {
      auto rel = fs::relative(entry.path().parent_path(), root).generic_string();
      runs[rel].push_back(entry.path());
    }
  };
  for (const auto& entry : fs::recursive_directory_iterator(root)) consider(entry);
  require(!runs.empty(), ErrorCode::MalformedLog, "no seed_*.csv logs under " + root.string());

  std::map<std::string, std::vector<SummaryRow>> summaries;
  for (auto& [name, files] : runs) {
    std::sort(files.begin(), files.end());
    std::vector<std::vector<LogRow>> logs;
    for (const auto& f : files) logs.push_back(read_log(f));
    summaries[name] = summarize(logs, window);
  }

  if (thresholds.empty()) {
    double high = -INFINITY;
    double low = INFINITY;
    for (const auto& [name, rows] : summaries) {
      if (rows.empty()) continue;
      high = std::max(high, rows.front().train_loss_mean);
      low = std::min(low, rows.back().train_loss_mean);
    }
    if (std::isfinite(high) && std::isfinite(low)) {
      for (const double frac : {0.25, 0.5, 0.75}) thresholds.push_back(high - frac * (high - low));
    }
  }

  PostprocessResult result;
  result.runs = runs.size();
  result.summary_csv = root / "summary.csv";
  result.thresholds_csv = root / "time_to_threshold.csv";

  std::ostringstream summary;
  summary << "run,iteration,est_wall_seconds,train_loss_mean,train_loss_std,test_loss_mean,"
             "test_loss_std,train_acc_mean,test_acc_mean\n";
  std::ostringstream hits;
  hits << "run,threshold,reached,iteration,est_wall_seconds\n";
  for (const auto& [name, rows] : summaries) {
    for (const auto& r : rows) {
      summary << name << ',' << r.iteration << ',' << format_number(r.est_wall_seconds) << ','
              << format_number(r.train_loss_mean) << ',' << format_number(r.train_loss_std) << ','
              << format_number(r.test_loss_mean) << ',' << format_number(r.test_loss_std) << ','
              << format_number(r.train_acc_mean) << ',' << format_number(r.test_acc_mean) << '\n';
    }
    for (const double threshold : thresholds) {
      const auto hit = time_to_threshold(rows, threshold);
      hits << name << ',' << format_number(threshold) << ',' << (hit.reached ? 1 : 0) << ',';
      if (hit.reached) hits << hit.iteration << ',' << format_number(hit.est_wall_seconds);
      else hits << ',';
      hits << '\n';
    }
  }
  for (const auto& [path, text] : {std::pair{result.summary_csv, summary.str()},
                                   std::pair{result.thresholds_csv, hits.str()}}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << text;
  }
  return result;
}

}  // namespace tngd::bench
