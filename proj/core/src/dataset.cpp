#include "tngd/dataset.hpp"

#include <Eigen/QR>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "tngd/error.hpp"

namespace tngd::bench {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    fail(ErrorCode::TruncatedFile, path.string() + ": header ends at byte " + std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset Dataset::slice(Eigen::Index begin, Eigen::Index count) const {
  require(begin >= 0 && count >= 0 && begin + count <= size(), ErrorCode::InvalidArgument,
          "dataset slice out of range");
  Dataset out;
  out.classes = classes;
  out.regression = regression;
  out.samples.inputs = samples.inputs.middleRows(begin, count);
  if (samples.targets.size() > 0) out.samples.targets = samples.targets.middleRows(begin, count);
  if (!samples.labels.empty()) {
    out.samples.labels.assign(samples.labels.begin() + begin, samples.labels.begin() + begin + count);
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_all(images);
  const auto label_bytes = read_all(labels);

  const std::uint32_t image_magic = read_be32(image_bytes, 0, images);
  if (image_magic != kImageMagic) {
    fail(ErrorCode::BadMagic, images.string() + ": magic " + std::to_string(image_magic));
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, labels);
  if (label_magic != kLabelMagic) {
    fail(ErrorCode::BadMagic, labels.string() + ": magic " + std::to_string(label_magic));
  }

  const std::size_t count = read_be32(image_bytes, 4, images);
  const std::size_t rows = read_be32(image_bytes, 8, images);
  const std::size_t cols = read_be32(image_bytes, 12, images);
  const std::size_t label_count = read_be32(label_bytes, 4, labels);
  if (count != label_count) {
    fail(ErrorCode::CountMismatch, std::to_string(count) + " images vs " +
                                       std::to_string(label_count) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (image_bytes.size() < 16 + count * pixels) {
    fail(ErrorCode::TruncatedFile, images.string() + ": expected " +
                                       std::to_string(16 + count * pixels) + " bytes");
  }
  if (label_bytes.size() < 8 + count) {
    fail(ErrorCode::TruncatedFile, labels.string() + ": expected " + std::to_string(8 + count) + " bytes");
  }

  Dataset data;
  data.samples.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      data.samples.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          static_cast<double>(image_bytes[16 + i * pixels + p]) / 255.0;
    }
  }
  std::size_t max_label = 0;
  data.samples.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    data.samples.labels.push_back(label_bytes[8 + i]);
    max_label = std::max<std::size_t>(max_label, label_bytes[8 + i]);
  }
  data.classes = count == 0 ? 0 : max_label + 1;
  return data;
}

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "blobs") return SynthKind::Blobs;
  if (name == "two-moons") return SynthKind::TwoMoons;
  if (name == "least-squares") return SynthKind::LeastSquares;
  fail(ErrorCode::ConfigError, "unknown synthetic dataset kind '" + std::string(name) + "'");
}

std::string_view to_string(SynthKind kind) noexcept {
  switch (kind) {
    case SynthKind::Blobs: return "blobs";
    case SynthKind::TwoMoons: return "two-moons";
    case SynthKind::LeastSquares: return "least-squares";
  }
  return "unknown";
}

numerics::DenseMatrix blob_centres(const SynthSpec& spec) {
  numerics::RngStream rng = numerics::RngStream(spec.seed).split(0xB10B);
  numerics::DenseMatrix centres(static_cast<Eigen::Index>(spec.classes),
                                static_cast<Eigen::Index>(spec.features));
  for (Eigen::Index i = 0; i < centres.size(); ++i) centres.data()[i] = spec.separation * rng.normal();
  return centres;
}

Dataset synth_dataset(const SynthSpec& spec) {
  require(spec.samples >= 2, ErrorCode::InvalidArgument, "synthetic datasets need n >= 2");
  require(spec.noise >= 0.0, ErrorCode::InvalidArgument, "noise must be nonnegative");
  const auto n = static_cast<Eigen::Index>(spec.samples);
  numerics::RngStream rng = numerics::RngStream(spec.seed).split(0xDA7A);
  Dataset data;

  switch (spec.kind) {
    case SynthKind::Blobs: {
      require(spec.classes >= 2 && spec.features >= 1, ErrorCode::InvalidArgument,
              "blobs need at least two classes and one feature");
      const auto centres = blob_centres(spec);
      const auto d = static_cast<Eigen::Index>(spec.features);
      data.classes = spec.classes;
      data.samples.inputs.resize(n, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto label = static_cast<std::size_t>(i) % spec.classes;
        data.samples.labels.push_back(label);
        for (Eigen::Index j = 0; j < d; ++j) {
          data.samples.inputs(i, j) =
              centres(static_cast<Eigen::Index>(label), j) + spec.noise * rng.normal();
        }
      }
      break;
    }
    case SynthKind::TwoMoons: {
      data.classes = 2;
      data.samples.inputs.resize(n, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t label = static_cast<std::size_t>(i) % 2;
        const double angle = std::numbers::pi * rng.uniform();
        double x = std::cos(angle);
        double y = std::sin(angle);
        if (label == 1) {
          x = 1.0 - x;
          y = 0.5 - y;
        }
        data.samples.labels.push_back(label);
        data.samples.inputs(i, 0) = x + spec.noise * rng.normal();
        data.samples.inputs(i, 1) = y + spec.noise * rng.normal();
      }
      break;
    }
    case SynthKind::LeastSquares: {
      require(spec.features >= 1, ErrorCode::InvalidArgument, "least-squares needs features >= 1");
      const auto d = static_cast<Eigen::Index>(spec.features);
      numerics::RngStream truth = numerics::RngStream(spec.seed).split(0x7E57);
      numerics::DenseVector w(d);
      for (Eigen::Index j = 0; j < d; ++j) w[j] = truth.normal();
      const double intercept = truth.normal();
      data.regression = true;
      data.samples.inputs.resize(n, d);
      data.samples.targets.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) data.samples.inputs(i, j) = rng.normal();
        data.samples.targets(i, 0) =
            data.samples.inputs.row(i).dot(w) + intercept + spec.noise * rng.normal();
      }
      break;
    }
  }
  return data;
}

Dataset synth_dataset(SynthKind kind, std::size_t samples, std::uint64_t seed, double noise) {
  SynthSpec spec;
  spec.kind = kind;
  spec.samples = samples;
  spec.seed = seed;
  spec.noise = noise;
  return synth_dataset(spec);
}

double blobs_bayes_accuracy(const SynthSpec& spec, std::size_t draws) {
  require(spec.kind == SynthKind::Blobs, ErrorCode::InvalidArgument,
          "Bayes accuracy is only defined for blobs");
  // Fresh draws around the same centres.
  const auto centres = blob_centres(spec);
  numerics::RngStream rng = numerics::RngStream(spec.seed).split(0xBA7E5);
  std::size_t correct = 0;
  numerics::DenseVector x(centres.cols());
  for (std::size_t i = 0; i < draws; ++i) {
    const auto label = static_cast<Eigen::Index>(i % spec.classes);
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = centres(label, j) + spec.noise * rng.normal();
    Eigen::Index best = 0;
    (centres.rowwise() - x.transpose()).rowwise().squaredNorm().minCoeff(&best);
    if (best == label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(draws);
}

LeastSquaresFit least_squares_optimum(const Dataset& data) {
  require(data.regression && data.samples.targets.cols() == 1, ErrorCode::InvalidArgument,
          "least_squares_optimum needs a single-target regression dataset");
  const Eigen::Index n = data.size();
  numerics::DenseMatrix design(n, data.features() + 1);
  design.leftCols(data.features()) = data.samples.inputs;
  design.col(data.features()).setOnes();
  const numerics::DenseVector y = data.samples.targets.col(0);
  LeastSquaresFit fit;
  fit.weights = design.colPivHouseholderQr().solve(y);
  fit.loss = 0.5 * (design * fit.weights - y).squaredNorm() / static_cast<double>(n);
  return fit;
}

}  // namespace tngd::bench
