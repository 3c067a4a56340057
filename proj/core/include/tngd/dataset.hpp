#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "tngd/curvature.hpp"

namespace tngd::bench {

struct Dataset {
  curvature::Batch samples;
  std::size_t classes = 0;  // 0 for regression
  bool regression = false;

  [[nodiscard]] Eigen::Index size() const noexcept { return samples.size(); }
  [[nodiscard]] Eigen::Index features() const noexcept { return samples.inputs.cols(); }
  /// Rows [begin, begin + count).
  [[nodiscard]] Dataset slice(Eigen::Index begin, Eigen::Index count) const;
};

/// Reads an IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian
/// headers, unsigned-byte payload). Pixels are scaled to [0, 1].
/// Throws BadMagic, TruncatedFile, CountMismatch, or Io if a file cannot be opened.
[[nodiscard]] Dataset load_idx(const std::filesystem::path& images,
                               const std::filesystem::path& labels);

enum class SynthKind { Blobs, TwoMoons, LeastSquares };

[[nodiscard]] SynthKind parse_synth_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(SynthKind kind) noexcept;

struct SynthSpec {
  SynthKind kind = SynthKind::Blobs;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double noise = 1.0;
  std::size_t features = 2;  // blobs and least-squares; two-moons is always 2-D
  std::size_t classes = 3;   // blobs only
  double separation = 3.0;   // blobs: standard deviation of the cluster centres
};

/// Deterministic per seed.
/// - blobs: isotropic Gaussian clusters around seeded centres, labels assigned
///   round-robin (equal priors), so the Bayes rule is nearest-centre.
/// - two-moons: the interleaved half circles with Gaussian jitter.
/// - least-squares: y = w.x + c + noise * eps with x ~ N(0, I).
[[nodiscard]] Dataset synth_dataset(const SynthSpec& spec);
[[nodiscard]] Dataset synth_dataset(SynthKind kind, std::size_t samples, std::uint64_t seed,
                                    double noise);

/// Cluster centres used by synth_dataset for a blobs spec (classes x features).
[[nodiscard]] numerics::DenseMatrix blob_centres(const SynthSpec& spec);

/// Monte Carlo accuracy of the nearest-centre (Bayes) rule for a blobs spec.
[[nodiscard]] double blobs_bayes_accuracy(const SynthSpec& spec, std::size_t draws);

/// Minimum of 0.5 * mean (w.x + c - y)^2 over (w, c), solved by column-pivoted QR.
struct LeastSquaresFit {
  numerics::DenseVector weights;  // features followed by the intercept
  double loss = 0.0;
};
[[nodiscard]] LeastSquaresFit least_squares_optimum(const Dataset& data);

}  // namespace tngd::bench
