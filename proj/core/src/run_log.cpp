#include "tngd/run_log.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tngd/error.hpp"

namespace tngd::bench {

namespace {

constexpr std::size_t kColumns = 12;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view field, std::string_view source, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    fail(ErrorCode::MalformedLog, std::string(source) + ":" + std::to_string(line) +
                                      ": cannot parse '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      fail(ErrorCode::MalformedLog, std::string(source) + ":" + std::to_string(line) + ": non-finite value");
    }
  }
  return value;
}

}  // namespace

std::string_view library_version() noexcept { return TNGD_VERSION; }

std::string format_number(double value) {
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return {buffer.data(), result.ptr};
}

std::vector<LogRow> to_rows(const optim::TrainHistory& history, const optim::OptimizerConfig& optimizer) {
  const bool device = optimizer.gradient_source == optim::GradientSource::NaturalGradient &&
                      optimizer.solver.kind == second_order::SolverKind::Thermodynamic;
  std::vector<LogRow> rows;
  rows.reserve(history.records.size());
  for (const auto& r : history.records) {
    LogRow row;
    row.seed = history.seed;
    row.iteration = r.iteration;
    row.epoch = r.epoch;
    row.train_loss = r.train_loss;
    row.test_loss = r.test_loss;
    row.train_acc = r.train_accuracy;
    row.test_acc = r.test_accuracy;
    row.lambda = r.damping;
    row.est_wall_seconds = r.est_wall_seconds;
    if (device) {
      row.analog_time_t = optimizer.solver.thermo.analog_time;
      row.delay_td = optimizer.delay_time;
      row.kappa0 = optimizer.solver.thermo.noise_variance;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_log(std::ostream& out, const std::vector<LogRow>& rows) {
  out << kLogHeader << '\n';
  for (const auto& r : rows) {
    for (const double v : {r.train_loss, r.test_loss, r.train_acc, r.test_acc, r.lambda,
                           r.est_wall_seconds, r.analog_time_t, r.delay_td, r.kappa0}) {
      require(std::isfinite(v), ErrorCode::NonFinite,
              "non-finite value in log row for iteration " + std::to_string(r.iteration));
    }
    out << r.seed << ',' << r.iteration << ',' << r.epoch << ',' << format_number(r.train_loss) << ','
        << format_number(r.test_loss) << ',' << format_number(r.train_acc) << ','
        << format_number(r.test_acc) << ',' << format_number(r.lambda) << ','
        << format_number(r.est_wall_seconds) << ',' << format_number(r.analog_time_t) << ','
        << format_number(r.delay_td) << ',' << format_number(r.kappa0) << '\n';
  }
}

void write_log(const std::filesystem::path& path, const std::vector<LogRow>& rows) {
  std::ostringstream buffer;
  write_log(buffer, rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << buffer.str();
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<LogRow> read_log(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line) || line != kLogHeader) {
    fail(ErrorCode::MalformedLog, std::string(source) + ": missing or unexpected header");
  }
  std::vector<LogRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != kColumns) {
      fail(ErrorCode::MalformedLog, std::string(source) + ":" + std::to_string(number) + ": expected " +
                                        std::to_string(kColumns) + " fields, got " +
                                        std::to_string(f.size()));
    }
    LogRow r;
    r.seed = parse_field<std::uint64_t>(f[0], source, number);
    r.iteration = parse_field<std::size_t>(f[1], source, number);
    r.epoch = parse_field<std::size_t>(f[2], source, number);
    r.train_loss = parse_field<double>(f[3], source, number);
    r.test_loss = parse_field<double>(f[4], source, number);
    r.train_acc = parse_field<double>(f[5], source, number);
    r.test_acc = parse_field<double>(f[6], source, number);
    r.lambda = parse_field<double>(f[7], source, number);
    r.est_wall_seconds = parse_field<double>(f[8], source, number);
    r.analog_time_t = parse_field<double>(f[9], source, number);
    r.delay_td = parse_field<double>(f[10], source, number);
    r.kappa0 = parse_field<double>(f[11], source, number);
    rows.push_back(r);
  }
  return rows;
}

std::vector<LogRow> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return read_log(in, path.string());
}

std::string sidecar_json(const ExperimentConfig& config) {
  using nlohmann::ordered_json;
  const auto& d = config.dataset;
  const auto& o = config.optimizer;
  const auto& t = o.solver.thermo;
  const auto& hw = config.training.hardware;

  ordered_json dataset;
  if (d.source == DatasetSource::IdxFiles) {
    dataset = {{"source", "idx"},
               {"train_images", d.train_images.string()},
               {"train_labels", d.train_labels.string()},
               {"test_images", d.test_images.string()},
               {"test_labels", d.test_labels.string()}};
  } else {
    dataset = {{"source", "synthetic"},     {"kind", to_string(d.kind)},
               {"train_size", d.train_size}, {"test_size", d.test_size},
               {"features", d.features},     {"classes", d.classes},
               {"noise", d.noise},           {"separation", d.separation},
               {"seed", d.seed}};
  }

  ordered_json optimizer = {
      {"update", o.update_rule == optim::UpdateRule::Adam ? "adam" : "sgd"},
      {"learning_rate", o.learning_rate},
      {"momentum", o.momentum},
      {"beta1", o.beta1},
      {"beta2", o.beta2},
      {"epsilon", o.epsilon},
      {"gradient", o.gradient_source == optim::GradientSource::NaturalGradient ? "natural" : "raw"},
      {"solver", to_string(o.solver.kind)},
      {"damping", o.damping},
      {"cg_iterations", o.solver.cg_iterations},
      {"cg_warm_start", o.solver.cg_warm_start},
      {"analog_time", t.analog_time},
      {"step_size", t.step_size},
      {"noise_variance", t.noise_variance},
      {"averaging_window", t.averaging_window},
      {"warm_start", to_string(t.warm_start)},
      {"delay_time", o.delay_time},
      {"lm_schedule", o.lm_schedule.has_value()},
  };
  if (o.lm_schedule) {
    optimizer["lm_a"] = o.lm_schedule->a;
    optimizer["lm_alpha"] = o.lm_schedule->alpha;
  }

  ordered_json doc = {
      {"schema_version", kConfigSchemaVersion},
      {"library_version", library_version()},
      {"csv_header", kLogHeader},
      {"dataset", dataset},
      {"model", {{"hidden", config.model.hidden}, {"activation", to_string(config.model.activation)}}},
      {"optimizer", optimizer},
      {"run",
       {{"name", config.name},
        {"epochs", config.training.epochs},
        {"batch_size", config.training.batch_size},
        {"max_iterations", config.training.max_iterations},
        {"seeds", config.seeds}}},
      {"hardware",
       {{"bits_per_value", hw.bits_per_value},
        {"transfer_rate_bits_per_sec", hw.transfer_rate_bits_per_sec},
        {"rc_seconds", hw.rc_seconds},
        {"seconds_per_model_unit", hw.seconds_per_model_unit},
        {"seconds_per_flop", hw.seconds_per_flop},
        {"seconds_per_factor_flop", hw.seconds_per_factor_flop}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace tngd::bench
