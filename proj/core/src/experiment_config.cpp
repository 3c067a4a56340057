#include "tngd/experiment_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "tngd/error.hpp"

namespace tngd::bench {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorCode::ConfigError, msg); }

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    config_error("'" + key + "': cannot parse '" + raw + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::stringstream stream(raw);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  config_error("'" + key + "': expected on/off, got '" + raw + "'");
}

curvature::Activation parse_activation(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "tanh") return curvature::Activation::Tanh;
  if (text == "relu") return curvature::Activation::Relu;
  if (text == "identity") return curvature::Activation::Identity;
  config_error("unknown activation '" + raw + "'");
}

second_order::SolverKind parse_solver(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "exact") return second_order::SolverKind::Exact;
  if (text == "cg") return second_order::SolverKind::ConjugateGradient;
  if (text == "woodbury") return second_order::SolverKind::Woodbury;
  if (text == "thermodynamic") return second_order::SolverKind::Thermodynamic;
  config_error("unknown solver '" + raw + "'");
}

thermo::WarmStart parse_warm_start(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "reset-to-rhs") return thermo::WarmStart::ResetToRhs;
  if (text == "reset-to-zero") return thermo::WarmStart::ResetToZero;
  if (text == "keep-previous") return thermo::WarmStart::KeepPrevious;
  config_error("unknown warm_start '" + raw + "'");
}

// Walks one section, dispatching each key to its handler; unknown keys fail.
class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  template <typename Handler>
  void each(const std::set<std::string>& known, Handler&& handle) const {
    for (const auto& [key, child] : tree_) {
      if (!child.empty()) config_error("[" + name_ + "]: nested key '" + key + "'");
      if (!known.contains(key)) config_error("[" + name_ + "]: unknown key '" + key + "'");
      handle(key, child.data());
    }
  }

 private:
  const pt::ptree& tree_;
  std::string name_;
};

void read_dataset(const pt::ptree& tree, DatasetConfig& out) {
  bool kind_given = false;
  Section(tree, "dataset").each(
      {"source", "kind", "train_size", "test_size", "features", "classes", "noise", "separation",
       "seed", "train_images", "train_labels", "test_images", "test_labels"},
      [&](const std::string& key, const std::string& value) {
        if (key == "source") {
          const std::string v = trim(value);
          if (v == "idx") out.source = DatasetSource::IdxFiles;
          else if (v == "synthetic") out.source = DatasetSource::Synthetic;
          else config_error("unknown dataset source '" + value + "'");
        } else if (key == "kind") {
          kind_given = true;
          out.kind = parse_synth_kind(trim(value));
        } else if (key == "train_size") out.train_size = parse_number<std::size_t>(key, value);
        else if (key == "test_size") out.test_size = parse_number<std::size_t>(key, value);
        else if (key == "features") out.features = parse_number<std::size_t>(key, value);
        else if (key == "classes") out.classes = parse_number<std::size_t>(key, value);
        else if (key == "noise") out.noise = parse_number<double>(key, value);
        else if (key == "separation") out.separation = parse_number<double>(key, value);
        else if (key == "seed") out.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "train_images") out.train_images = trim(value);
        else if (key == "train_labels") out.train_labels = trim(value);
        else if (key == "test_images") out.test_images = trim(value);
        else if (key == "test_labels") out.test_labels = trim(value);
      });
  if (out.source == DatasetSource::IdxFiles && kind_given) {
    config_error("[dataset]: 'kind' only applies to synthetic sources");
  }
}

void read_model(const pt::ptree& tree, ModelConfig& out) {
  Section(tree, "model").each({"hidden", "activation"},
                              [&](const std::string& key, const std::string& value) {
                                if (key == "hidden") out.hidden = parse_list<std::size_t>(key, value);
                                else out.activation = parse_activation(value);
                              });
}

void read_optimizer(const pt::ptree& tree, optim::OptimizerConfig& out) {
  // Adam defaults differ from the TNGD ones; apply them before explicit keys.
  if (const auto update = tree.get_optional<std::string>("update"); update && trim(*update) == "adam") {
    out.update_rule = optim::UpdateRule::Adam;
    out.learning_rate = 0.001;
  }
  bool lm = false;
  optim::LmSchedule schedule;
  Section(tree, "optimizer").each(
      {"update", "learning_rate", "momentum", "beta1", "beta2", "epsilon", "gradient", "solver",
       "damping", "cg_iterations", "cg_warm_start", "analog_time", "step_size", "noise_variance",
       "averaging_window", "warm_start", "delay_time", "lm_schedule", "lm_a", "lm_alpha"},
      [&](const std::string& key, const std::string& value) {
        auto& tls = out.solver.thermo;
        if (key == "update") {
          const std::string v = trim(value);
          if (v == "sgd") out.update_rule = optim::UpdateRule::Sgd;
          else if (v != "adam") config_error("unknown update rule '" + value + "'");
        } else if (key == "learning_rate") out.learning_rate = parse_number<double>(key, value);
        else if (key == "momentum") out.momentum = parse_number<double>(key, value);
        else if (key == "beta1") out.beta1 = parse_number<double>(key, value);
        else if (key == "beta2") out.beta2 = parse_number<double>(key, value);
        else if (key == "epsilon") out.epsilon = parse_number<double>(key, value);
        else if (key == "gradient") {
          const std::string v = trim(value);
          if (v == "natural") out.gradient_source = optim::GradientSource::NaturalGradient;
          else if (v == "raw") out.gradient_source = optim::GradientSource::RawGradient;
          else config_error("unknown gradient source '" + value + "'");
        } else if (key == "solver") out.solver.kind = parse_solver(value);
        else if (key == "damping") out.damping = parse_number<double>(key, value);
        else if (key == "cg_iterations") out.solver.cg_iterations = parse_number<std::size_t>(key, value);
        else if (key == "cg_warm_start") out.solver.cg_warm_start = parse_bool(key, value);
        else if (key == "analog_time") tls.analog_time = parse_number<double>(key, value);
        else if (key == "step_size") tls.step_size = parse_number<double>(key, value);
        else if (key == "noise_variance") tls.noise_variance = parse_number<double>(key, value);
        else if (key == "averaging_window") tls.averaging_window = parse_number<double>(key, value);
        else if (key == "warm_start") tls.warm_start = parse_warm_start(value);
        else if (key == "delay_time") out.delay_time = parse_number<double>(key, value);
        else if (key == "lm_schedule") lm = parse_bool(key, value);
        else if (key == "lm_a") schedule.a = parse_number<double>(key, value);
        else if (key == "lm_alpha") schedule.alpha = parse_number<double>(key, value);
      });
  if (lm) out.lm_schedule = schedule;
}

void read_run(const pt::ptree& tree, ExperimentConfig& out) {
  Section(tree, "run").each(
      {"name", "epochs", "batch_size", "max_iterations", "seeds", "output_dir"},
      [&](const std::string& key, const std::string& value) {
        if (key == "name") out.name = trim(value);
        else if (key == "epochs") out.training.epochs = parse_number<std::size_t>(key, value);
        else if (key == "batch_size") out.training.batch_size = parse_number<std::size_t>(key, value);
        else if (key == "max_iterations") out.training.max_iterations = parse_number<std::size_t>(key, value);
        else if (key == "seeds") out.seeds = parse_list<std::uint64_t>(key, value);
        else if (key == "output_dir") out.output_dir = trim(value);
      });
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    optimizer.validate();
    training.hardware.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (name.empty() || name.find('/') != std::string::npos) config_error("[run]: invalid name '" + name + "'");
  if (seeds.empty()) config_error("[run]: seeds must not be empty");
  if (training.epochs == 0) config_error("[run]: epochs must be positive");
  if (training.batch_size == 0) config_error("[run]: batch_size must be positive");
  if (model.hidden.end() != std::find(model.hidden.begin(), model.hidden.end(), 0u)) {
    config_error("[model]: hidden widths must be positive");
  }
  if (dataset.source == DatasetSource::IdxFiles) {
    for (const auto* p : {&dataset.train_images, &dataset.train_labels}) {
      if (p->empty()) config_error("[dataset]: idx source needs train_images and train_labels");
    }
    if (dataset.test_images.empty() != dataset.test_labels.empty()) {
      config_error("[dataset]: test_images and test_labels go together");
    }
    for (const auto* p : {&dataset.train_images, &dataset.train_labels, &dataset.test_images,
                          &dataset.test_labels}) {
      if (!p->empty() && !std::filesystem::exists(resolve(base_dir, *p))) {
        config_error("[dataset]: file not found: " + resolve(base_dir, *p).string());
      }
    }
  } else {
    if (dataset.train_size < 2) config_error("[dataset]: train_size must be at least 2");
    if (training.batch_size > dataset.train_size) {
      config_error("[run]: batch_size exceeds the training set size");
    }
    if (!(dataset.noise >= 0.0)) config_error("[dataset]: noise must be nonnegative");
    if (dataset.kind == SynthKind::Blobs && dataset.classes < 2) {
      config_error("[dataset]: blobs need at least two classes");
    }
    if (dataset.features == 0) config_error("[dataset]: features must be positive");
  }
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream stream{std::string(text)};
    pt::read_ini(stream, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(std::string("malformed config: ") + e.what());
  }

  ExperimentConfig config;
  config.base_dir = base_dir;
  bool version_seen = false;
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      if (key != "schema_version") config_error("unknown top-level key '" + key + "'");
      const int version = parse_number<int>(key, child.data());
      if (version != kConfigSchemaVersion) {
        config_error("schema_version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kConfigSchemaVersion) + ")");
      }
      version_seen = true;
    } else if (key == "dataset") read_dataset(child, config.dataset);
    else if (key == "model") read_model(child, config.model);
    else if (key == "optimizer") read_optimizer(child, config.optimizer);
    else if (key == "run") read_run(child, config);
    else config_error("unknown section [" + key + "]");
  }
  if (!version_seen) config_error("missing schema_version");
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

DataSplit materialize(const DatasetConfig& config, const std::filesystem::path& base_dir) {
  DataSplit split;
  if (config.source == DatasetSource::IdxFiles) {
    split.train = load_idx(resolve(base_dir, config.train_images), resolve(base_dir, config.train_labels));
    if (!config.test_images.empty()) {
      split.test = load_idx(resolve(base_dir, config.test_images), resolve(base_dir, config.test_labels));
      split.test.classes = split.train.classes = std::max(split.train.classes, split.test.classes);
    } else {
      split.test = split.train.slice(0, 0);
    }
    return split;
  }
  SynthSpec spec;
  spec.kind = config.kind;
  spec.samples = config.train_size + config.test_size;
  spec.seed = config.seed;
  spec.noise = config.noise;
  spec.features = config.features;
  spec.classes = config.classes;
  spec.separation = config.separation;
  const Dataset all = synth_dataset(spec);
  const auto n_train = static_cast<Eigen::Index>(config.train_size);
  split.train = all.slice(0, n_train);
  split.test = all.slice(n_train, all.size() - n_train);
  return split;
}

curvature::ModelSpec model_for(const ModelConfig& config, const Dataset& train) {
  curvature::ModelSpec spec;
  spec.loss = train.regression ? curvature::LossHead::MeanSquaredError
                               : curvature::LossHead::SoftmaxCrossEntropy;
  Eigen::Index width = train.features();
  for (const std::size_t hidden : config.hidden) {
    spec.layers.push_back({width, static_cast<Eigen::Index>(hidden), config.activation});
    width = static_cast<Eigen::Index>(hidden);
  }
  const Eigen::Index outputs =
      train.regression ? train.samples.targets.cols() : static_cast<Eigen::Index>(train.classes);
  spec.layers.push_back({width, outputs, curvature::Activation::Identity});
  spec.validate();
  return spec;
}

std::string_view to_string(curvature::Activation activation) noexcept {
  switch (activation) {
    case curvature::Activation::Identity: return "identity";
    case curvature::Activation::Tanh: return "tanh";
    case curvature::Activation::Relu: return "relu";
  }
  return "unknown";
}

std::string_view to_string(second_order::SolverKind kind) noexcept {
  switch (kind) {
    case second_order::SolverKind::Exact: return "exact";
    case second_order::SolverKind::ConjugateGradient: return "cg";
    case second_order::SolverKind::Woodbury: return "woodbury";
    case second_order::SolverKind::Thermodynamic: return "thermodynamic";
  }
  return "unknown";
}

std::string_view to_string(thermo::WarmStart policy) noexcept {
  switch (policy) {
    case thermo::WarmStart::ResetToRhs: return "reset-to-rhs";
    case thermo::WarmStart::ResetToZero: return "reset-to-zero";
    case thermo::WarmStart::KeepPrevious: return "keep-previous";
  }
  return "unknown";
}

}  // namespace tngd::bench
