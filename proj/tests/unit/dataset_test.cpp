#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tngd/dataset.hpp"
#include "tngd/error.hpp"
#include "tngd/optim.hpp"

namespace tngd::bench {
namespace {

using numerics::DenseMatrix;
using numerics::DenseVector;
using testing::idx_images;
using testing::idx_labels;
using testing::TempDir;
using testing::write_bytes;

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

struct IdxPair {
  TempDir dir{"idx"};
  std::filesystem::path images = dir.path() / "images.idx3";
  std::filesystem::path labels = dir.path() / "labels.idx1";
};

TEST(LoadIdx, TwoImageFixtureByteByByte) {
  IdxPair f;
  // Written out explicitly: magic 0x00000803, count 2, rows 2, cols 2.
  write_bytes(f.images, {0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
                         0x00, 0x00, 0x00, 0x02, 0, 1, 2, 255, 128, 64, 32, 16});
  write_bytes(f.labels, {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 7, 3});
  const auto d = load_idx(f.images, f.labels);
  ASSERT_EQ(d.size(), 2);
  ASSERT_EQ(d.features(), 4);
  EXPECT_EQ(d.samples.inputs(0, 0), 0.0);
  EXPECT_EQ(d.samples.inputs(0, 1), 1.0 / 255.0);
  EXPECT_EQ(d.samples.inputs(0, 2), 2.0 / 255.0);
  EXPECT_EQ(d.samples.inputs(0, 3), 1.0);
  EXPECT_EQ(d.samples.inputs(1, 0), 128.0 / 255.0);
  EXPECT_EQ(d.samples.inputs(1, 3), 16.0 / 255.0);
  EXPECT_EQ(d.samples.labels, (std::vector<std::size_t>{7, 3}));
  EXPECT_EQ(d.classes, 8u);
  EXPECT_FALSE(d.regression);
}

TEST(LoadIdx, HelperBuiltFixtureMatches) {
  IdxPair f;
  std::vector<unsigned char> pixels(3 * 4 * 5);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<unsigned char>(i * 4);
  write_bytes(f.images, idx_images(0x803, 3, 4, 5, pixels));
  write_bytes(f.labels, idx_labels(0x801, 3, {0, 1, 2}));
  const auto d = load_idx(f.images, f.labels);
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.features(), 20);
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 20; ++c) EXPECT_EQ(d.samples.inputs(r, c), pixels[static_cast<std::size_t>(r * 20 + c)] / 255.0);
  }
}

TEST(LoadIdx, ErrorPaths) {
  IdxPair f;
  const std::vector<unsigned char> pixels(2 * 2 * 2, 9);
  write_bytes(f.labels, idx_labels(0x801, 2, {0, 1}));

  write_bytes(f.images, idx_images(0x804, 2, 2, 2, pixels));
  EXPECT_EQ(code_of([&] { (void)load_idx(f.images, f.labels); }), ErrorCode::BadMagic);

  write_bytes(f.images, idx_images(0x803, 2, 2, 2, pixels));
  write_bytes(f.labels, idx_labels(0x803, 2, {0, 1}));
  EXPECT_EQ(code_of([&] { (void)load_idx(f.images, f.labels); }), ErrorCode::BadMagic);

  write_bytes(f.labels, idx_labels(0x801, 3, {0, 1, 1}));
  EXPECT_EQ(code_of([&] { (void)load_idx(f.images, f.labels); }), ErrorCode::CountMismatch);

  write_bytes(f.labels, idx_labels(0x801, 2, {0, 1}));
  write_bytes(f.images, idx_images(0x803, 2, 2, 2, std::vector<unsigned char>(7, 1)));
  EXPECT_EQ(code_of([&] { (void)load_idx(f.images, f.labels); }), ErrorCode::TruncatedFile);

  write_bytes(f.images, {0x00, 0x00, 0x08, 0x03, 0x00});
  EXPECT_EQ(code_of([&] { (void)load_idx(f.images, f.labels); }), ErrorCode::TruncatedFile);

  write_bytes(f.images, idx_images(0x803, 2, 2, 2, pixels));
  write_bytes(f.labels, {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 1});
  EXPECT_EQ(code_of([&] { (void)load_idx(f.images, f.labels); }), ErrorCode::TruncatedFile);

  EXPECT_EQ(code_of([&] { (void)load_idx(f.dir.path() / "missing", f.labels); }), ErrorCode::Io);
}

TEST(Synth, DeterministicPerSeed) {
  for (const auto kind : {SynthKind::Blobs, SynthKind::TwoMoons, SynthKind::LeastSquares}) {
    const auto a = synth_dataset(kind, 50, 3, 0.5);
    const auto b = synth_dataset(kind, 50, 3, 0.5);
    const auto c = synth_dataset(kind, 50, 4, 0.5);
    EXPECT_EQ(a.samples.inputs, b.samples.inputs);
    EXPECT_EQ(a.samples.labels, b.samples.labels);
    EXPECT_EQ(a.samples.targets, b.samples.targets);
    EXPECT_NE(a.samples.inputs, c.samples.inputs);
  }
  EXPECT_EQ(code_of([] { (void)synth_dataset(SynthKind::Blobs, 1, 0, 1.0); }), ErrorCode::InvalidArgument);
}

TEST(Synth, ShapesAndLabels) {
  SynthSpec spec;
  spec.samples = 30;
  spec.features = 5;
  spec.classes = 4;
  const auto blobs = synth_dataset(spec);
  EXPECT_EQ(blobs.features(), 5);
  EXPECT_EQ(blobs.classes, 4u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(blobs.samples.labels[i], i % 4);

  const auto moons = synth_dataset(SynthKind::TwoMoons, 20, 0, 0.1);
  EXPECT_EQ(moons.features(), 2);
  EXPECT_EQ(moons.classes, 2u);

  spec.kind = SynthKind::LeastSquares;
  const auto ls = synth_dataset(spec);
  EXPECT_TRUE(ls.regression);
  EXPECT_EQ(ls.samples.targets.rows(), 30);
  EXPECT_EQ(ls.samples.targets.cols(), 1);
  EXPECT_EQ(ls.classes, 0u);

  const auto part = blobs.slice(10, 5);
  EXPECT_EQ(part.size(), 5);
  EXPECT_EQ(part.samples.inputs.row(0), blobs.samples.inputs.row(10));
  EXPECT_EQ(part.samples.labels[0], blobs.samples.labels[10]);
}

TEST(Synth, NoiselessBlobsAreLinearlySeparable) {
  SynthSpec spec;
  spec.samples = 60;
  spec.noise = 0.0;
  spec.seed = 5;
  const auto data = synth_dataset(spec);
  // Softmax regression (no hidden layer).
  curvature::ModelSpec model;
  model.loss = curvature::LossHead::SoftmaxCrossEntropy;
  model.layers = {{2, 3, curvature::Activation::Identity}};
  const curvature::Network net(model);
  optim::OptimizerConfig c;
  c.gradient_source = optim::GradientSource::RawGradient;
  c.learning_rate = 0.5;
  optim::TrainSettings settings;
  settings.epochs = 300;
  settings.batch_size = 60;
  const auto h = optim::train(net, data.samples, {}, c, settings, 0);
  EXPECT_EQ(h.final_train_accuracy, 1.0);
}

TEST(Synth, BayesAccuracyMatchesNearestCentreOnSamples) {
  SynthSpec spec;
  spec.samples = 4000;
  spec.features = 3;
  spec.classes = 3;
  spec.separation = 1.5;
  spec.seed = 9;
  const auto data = synth_dataset(spec);
  const DenseMatrix centres = blob_centres(spec);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    Eigen::Index best = 0;
    (centres.rowwise() - data.samples.inputs.row(i)).rowwise().squaredNorm().minCoeff(&best);
    correct += static_cast<std::size_t>(best) == data.samples.labels[static_cast<std::size_t>(i)];
  }
  const double empirical = static_cast<double>(correct) / 4000.0;
  const double bayes = blobs_bayes_accuracy(spec, 20000);
  EXPECT_GT(bayes, 1.0 / 3.0);
  EXPECT_LT(bayes, 1.0);
  EXPECT_NEAR(empirical, bayes, 0.03);
}

TEST(Synth, LeastSquaresOptimumMatchesNormalEquations) {
  SynthSpec spec;
  spec.kind = SynthKind::LeastSquares;
  spec.samples = 300;
  spec.features = 4;
  spec.seed = 12;
  spec.noise = 0.3;
  const auto data = synth_dataset(spec);
  const auto fit = least_squares_optimum(data);

  DenseMatrix x(300, 5);
  x << data.samples.inputs, DenseMatrix::Ones(300, 1);
  const DenseVector y = data.samples.targets.col(0);
  const DenseVector w = numerics::cholesky_solve(DenseMatrix(x.transpose() * x), DenseVector(x.transpose() * y));
  EXPECT_LE((fit.weights - w).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(fit.loss, 0.5 * (x * w - y).squaredNorm() / 300.0, 1e-8);
  // Noise floor: residual variance close to noise^2.
  EXPECT_NEAR(2.0 * fit.loss, 0.09, 0.03);
}

TEST(Synth, KindNames) {
  EXPECT_EQ(parse_synth_kind("two-moons"), SynthKind::TwoMoons);
  EXPECT_EQ(to_string(parse_synth_kind("least-squares")), "least-squares");
  EXPECT_EQ(code_of([] { (void)parse_synth_kind("spirals"); }), ErrorCode::ConfigError);
}

}  // namespace
}  // namespace tngd::bench
