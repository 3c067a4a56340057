#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "tngd/error.hpp"
#include "tngd/experiment_config.hpp"

namespace tngd::bench {
namespace {

using testing::TempDir;

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

constexpr const char* kFull = R"(schema_version = 1

[dataset]
source = synthetic
kind = two-moons
train_size = 120
test_size = 30
noise = 0.2
seed = 11

[model]
hidden = 8, 6
activation = relu

[optimizer]
update = sgd
learning_rate = 0.05
momentum = 0.5
gradient = natural
solver = thermodynamic
damping = 0.02
analog_time = 10
step_size = 0.05
noise_variance = 1e-4
averaging_window = 0.2
warm_start = reset-to-zero
delay_time = 2
lm_schedule = on
lm_a = 0.8
lm_alpha = 0.5

[run]
name = moons
epochs = 3
batch_size = 16
max_iterations = 20
seeds = 1, 2, 5
output_dir = out
)";

ExperimentConfig parse_with(const std::string& replace, const std::string& with) {
  std::string text = kFull;
  const auto at = text.find(replace);
  EXPECT_NE(at, std::string::npos) << replace;
  text.replace(at, replace.size(), with);
  return parse_config(text);
}

TEST(ParseConfig, ReadsEveryField) {
  const auto c = parse_config(kFull);
  EXPECT_EQ(c.dataset.source, DatasetSource::Synthetic);
  EXPECT_EQ(c.dataset.kind, SynthKind::TwoMoons);
  EXPECT_EQ(c.dataset.train_size, 120u);
  EXPECT_EQ(c.dataset.test_size, 30u);
  EXPECT_EQ(c.dataset.noise, 0.2);
  EXPECT_EQ(c.dataset.seed, 11u);
  EXPECT_EQ(c.model.hidden, (std::vector<std::size_t>{8, 6}));
  EXPECT_EQ(c.model.activation, curvature::Activation::Relu);
  const auto& o = c.optimizer;
  EXPECT_EQ(o.update_rule, optim::UpdateRule::Sgd);
  EXPECT_EQ(o.learning_rate, 0.05);
  EXPECT_EQ(o.momentum, 0.5);
  EXPECT_EQ(o.gradient_source, optim::GradientSource::NaturalGradient);
  EXPECT_EQ(o.solver.kind, second_order::SolverKind::Thermodynamic);
  EXPECT_EQ(o.damping, 0.02);
  EXPECT_EQ(o.solver.thermo.analog_time, 10.0);
  EXPECT_EQ(o.solver.thermo.step_size, 0.05);
  EXPECT_EQ(o.solver.thermo.noise_variance, 1e-4);
  EXPECT_EQ(o.solver.thermo.averaging_window, 0.2);
  EXPECT_EQ(o.solver.thermo.warm_start, thermo::WarmStart::ResetToZero);
  EXPECT_EQ(o.delay_time, 2.0);
  ASSERT_TRUE(o.lm_schedule.has_value());
  EXPECT_EQ(o.lm_schedule->a, 0.8);
  EXPECT_EQ(o.lm_schedule->alpha, 0.5);
  EXPECT_EQ(c.name, "moons");
  EXPECT_EQ(c.training.epochs, 3u);
  EXPECT_EQ(c.training.batch_size, 16u);
  EXPECT_EQ(c.training.max_iterations, 20u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 5}));
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_NO_THROW(c.validate());
}

TEST(ParseConfig, DefaultsFollowTheDeskTable) {
  const auto c = parse_config("schema_version = 1\n");
  EXPECT_EQ(c.optimizer.learning_rate, 0.01);
  EXPECT_EQ(c.optimizer.damping, 0.01);
  EXPECT_EQ(c.optimizer.solver.thermo.analog_time, 50.0);
  EXPECT_EQ(c.optimizer.solver.thermo.step_size, 0.1);
  EXPECT_EQ(c.optimizer.delay_time, 0.0);
  EXPECT_EQ(c.dataset.train_size, 2000u);
  EXPECT_EQ(c.dataset.test_size, 1000u);
  EXPECT_EQ(c.training.batch_size, 64u);
  EXPECT_LE(c.training.epochs, 10u);

  const auto adam = parse_config("schema_version = 1\n[optimizer]\nupdate = adam\n");
  EXPECT_EQ(adam.optimizer.update_rule, optim::UpdateRule::Adam);
  EXPECT_EQ(adam.optimizer.learning_rate, 0.001);
  EXPECT_EQ(adam.optimizer.beta1, 0.9);
  EXPECT_EQ(adam.optimizer.beta2, 0.999);
  EXPECT_EQ(adam.optimizer.epsilon, 1e-8);
  const auto adam_lr = parse_config("schema_version = 1\n[optimizer]\nlearning_rate = 0.2\nupdate = adam\n");
  EXPECT_EQ(adam_lr.optimizer.learning_rate, 0.2);
}

TEST(ParseConfig, RejectsUnknownAndMalformedInput) {
  const auto rejects = [](const std::string& text) {
    return code_of([&] { (void)parse_config(text); }) == ErrorCode::ConfigError;
  };
  EXPECT_TRUE(rejects("[run]\nname = x\n"));                       // no schema_version
  EXPECT_TRUE(rejects("schema_version = 2\n"));
  EXPECT_TRUE(rejects("schema_version = 1\nfoo = 1\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[extras]\na = 1\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[optimizer]\nlearning_rte = 0.1\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[optimizer]\nlearning_rate = fast\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[optimizer]\nlearning_rate = 0.1x\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[optimizer]\nsolver = magic\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[optimizer]\nlm_schedule = maybe\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[run]\nepochs = -3\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[run]\nseeds = 1, two\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[dataset]\nsource = idx\nkind = blobs\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[run]\nname = a\nname = b\n"));
  EXPECT_TRUE(rejects("schema_version = 1\n[run\n"));
}

TEST(Validate, ReportsConfigErrors) {
  const auto invalid = [](const ExperimentConfig& c) {
    return code_of([&] { c.validate(); }) == ErrorCode::ConfigError;
  };
  EXPECT_TRUE(invalid(parse_with("batch_size = 16", "batch_size = 121")));
  EXPECT_TRUE(invalid(parse_with("learning_rate = 0.05", "learning_rate = 0")));
  EXPECT_TRUE(invalid(parse_with("delay_time = 2", "delay_time = 11")));
  EXPECT_TRUE(invalid(parse_with("lm_a = 0.8", "lm_a = 0.4")));
  EXPECT_TRUE(invalid(parse_with("seeds = 1, 2, 5", "seeds = ")));
  EXPECT_TRUE(invalid(parse_with("hidden = 8, 6", "hidden = 8, 0")));
  EXPECT_TRUE(invalid(parse_with("name = moons", "name = a/b")));
}

TEST(LoadConfig, ResolvesIdxPathsAgainstTheConfigFile) {
  TempDir dir("cfg");
  std::filesystem::create_directories(dir.path() / "data");
  testing::write_bytes(dir.path() / "data" / "img", testing::idx_images(0x803, 4, 1, 2, {1, 2, 3, 4, 5, 6, 7, 8}));
  testing::write_bytes(dir.path() / "data" / "lbl", testing::idx_labels(0x801, 4, {0, 1, 0, 1}));
  {
    std::ofstream out(dir.path() / "exp.ini");
    out << "schema_version = 1\n[dataset]\nsource = idx\ntrain_images = data/img\ntrain_labels = data/lbl\n"
        << "[run]\nbatch_size = 2\n";
  }
  const auto c = load_config(dir.path() / "exp.ini");
  EXPECT_EQ(c.base_dir, dir.path());
  EXPECT_NO_THROW(c.validate());
  const auto split = materialize(c.dataset, c.base_dir);
  EXPECT_EQ(split.train.size(), 4);
  EXPECT_EQ(split.test.size(), 0);

  auto missing = c;
  missing.dataset.train_labels = "data/nope";
  EXPECT_EQ(code_of([&] { missing.validate(); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { (void)load_config(dir.path() / "absent.ini"); }), ErrorCode::Io);
}

TEST(LoadConfig, ShippedDeskConfigIsValid) {
  const auto c = load_config(std::filesystem::path(TNGD_SOURCE_DIR) / "configs" / "desk_tngd.ini");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.optimizer.solver.kind, second_order::SolverKind::Thermodynamic);
}

TEST(Materialize, SyntheticSplitAndModel) {
  const auto c = parse_config(kFull);
  const auto split = materialize(c.dataset, {});
  EXPECT_EQ(split.train.size(), 120);
  EXPECT_EQ(split.test.size(), 30);
  const auto spec = model_for(c.model, split.train);
  ASSERT_EQ(spec.layers.size(), 3u);
  EXPECT_EQ(spec.input_dim(), 2);
  EXPECT_EQ(spec.output_dim(), 2);
  EXPECT_EQ(spec.layers[0].activation, curvature::Activation::Relu);
  EXPECT_EQ(spec.layers[2].activation, curvature::Activation::Identity);
  EXPECT_EQ(spec.loss, curvature::LossHead::SoftmaxCrossEntropy);

  DatasetConfig ls;
  ls.kind = SynthKind::LeastSquares;
  ls.train_size = 10;
  ls.test_size = 5;
  ls.features = 3;
  const auto reg = materialize(ls, {});
  const auto reg_spec = model_for({}, reg.train);
  EXPECT_EQ(reg_spec.loss, curvature::LossHead::MeanSquaredError);
  EXPECT_EQ(reg_spec.output_dim(), 1);
}

}  // namespace
}  // namespace tngd::bench
