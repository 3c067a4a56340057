#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tngd/curvature.hpp"
#include "tngd/dataset.hpp"
#include "tngd/optim.hpp"

namespace tngd::bench {

inline constexpr int kConfigSchemaVersion = 1;

enum class DatasetSource { IdxFiles, Synthetic };

struct DatasetConfig {
  DatasetSource source = DatasetSource::Synthetic;
  SynthKind kind = SynthKind::Blobs;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::size_t features = 8;
  std::size_t classes = 4;
  double noise = 1.0;
  double separation = 3.0;
  std::uint64_t seed = 0;
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;  // optional for idx
  std::filesystem::path test_labels;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{16};
  curvature::Activation activation = curvature::Activation::Tanh;
};

struct ExperimentConfig {
  std::string name = "run";
  DatasetConfig dataset;
  ModelConfig model;
  optim::OptimizerConfig optimizer;
  optim::TrainSettings training;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "runs";
  /// Directory of the config file; relative dataset paths resolve against it.
  std::filesystem::path base_dir;

  /// Checks the optimizer/training values, that referenced files exist and
  /// that the batch fits in the training set. Throws ConfigError.
  void validate() const;
};

/// Parses the sectioned key = value format (see README). Unknown sections or
/// keys, a missing or different schema_version, and malformed values throw
/// ConfigError; Io if the file cannot be read.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text,
                                            const std::filesystem::path& base_dir = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Train and test sets described by the dataset section. Synthetic sets draw
/// train_size + test_size samples and split them in order.
struct DataSplit {
  Dataset train;
  Dataset test;
};
[[nodiscard]] DataSplit materialize(const DatasetConfig& config, const std::filesystem::path& base_dir);

/// Network for the dataset: hidden layers with the configured activation and
/// an identity output layer of width classes (or 1 for regression).
[[nodiscard]] curvature::ModelSpec model_for(const ModelConfig& config, const Dataset& train);

[[nodiscard]] std::string_view to_string(curvature::Activation activation) noexcept;
[[nodiscard]] std::string_view to_string(second_order::SolverKind kind) noexcept;
[[nodiscard]] std::string_view to_string(thermo::WarmStart policy) noexcept;

}  // namespace tngd::bench
