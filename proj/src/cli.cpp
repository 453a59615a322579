#include "vuix/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "vuix/vuix.hpp"

namespace vuix::cli {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

std::string num(double x) { return fmt::format("{:.9g}", x); }

// Doubles in JSON carry the same 9 significant digits as the CSV output.
json jnum(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(num(x));
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

void write_csv(std::ostream& os, const Table& table) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << csv_field(row[i]);
    }
    os << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open case file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw InputError("failed writing '" + path + "'");
}

/// Sends a single document to --out or to the output stream.
void emit(const ExperimentConfig& config, std::ostream& out, const std::string& text) {
  if (config.out_path.empty()) {
    out << text;
  } else {
    write_file(config.out_path, text);
  }
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

struct Label {
  std::string kind;
  std::string from_bus;
  std::string to_bus;
};

Label label_of(const SystemModel& model, std::size_t i) {
  const auto& rows = model.jacobian().rows;
  if (rows.empty()) return {"row", "", ""};
  const auto& d = rows[i];
  return {kind_name(d.kind), std::to_string(d.from_bus),
          d.is_flow() ? std::to_string(d.to_bus) : std::string()};
}

json label_json(const SystemModel& model, std::size_t i) {
  const auto label = label_of(model, i);
  json j{{"measurement_id", i + 1}, {"kind", label.kind}};
  j["from_bus"] = label.from_bus.empty() ? json(nullptr) : json(std::stoi(label.from_bus));
  j["to_bus"] = label.to_bus.empty() ? json(nullptr) : json(std::stoi(label.to_bus));
  return j;
}

json model_json(const ExperimentConfig& config, const SystemModel& model) {
  json j{{"case", config.case_path},
         {"m", model.measurements()},
         {"n", model.states()},
         {"sigma2", jnum(model.sigma2())},
         {"snr_db", jnum(model.snr_db())},
         {"lambda", jnum(config.lambda)},
         {"v", jnum(config.v)},
         {"information_unit", "nats"}};
  if (model.state_cov().rho) j["rho"] = jnum(*model.state_cov().rho);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& value, const char* what) {
  if (!value.is_array() || value.empty() || !value.front().is_array()) {
    throw MalformedCase(std::string(what) + " must be a nonempty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(value.size());
  const auto cols = static_cast<Eigen::Index>(value.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = value[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw MalformedCase(std::string("ragged rows in ") + what);
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

SystemModel model_from_json(const json& doc, const ExperimentConfig& config) {
  JacobianMatrix jacobian = JacobianMatrix::unlabeled(matrix_from_json(doc.at("jacobian"), "jacobian"));
  StateCovariance state_cov =
      doc.contains("state_covariance")
          ? StateCovariance{matrix_from_json(doc.at("state_covariance"), "state_covariance"), {}}
          : toeplitz_state_covariance(jacobian.states(), config.rho);
  NoiseModel noise = doc.contains("sigma2")
                         ? NoiseModel{doc.at("sigma2").get<double>()}
                         : sigma2_from_snr(jacobian, state_cov, config.snr_db);
  return build_system_model(std::move(jacobian), std::move(state_cov), noise);
}

// ---------------------------------------------------------------------------

void cmd_rank(const ExperimentConfig& config, const SystemModel& model, std::ostream& out) {
  const auto ranking = closed_form_ranking(model);
  const DeltaEvaluator evaluate(model, ExistingAttackState(model.measurements()));
  const CostParams params{config.lambda, config.v};

  if (config.format == OutputFormat::Json) {
    json doc = model_json(config, model);
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "rank";
    doc["rows"] = json::array();
    for (std::size_t j = 0; j < ranking.size(); ++j) {
      const auto i = ranking.order[j];
      json row = label_json(model, i);
      row["vuix"] = j + 1;
      row["delta_at_v"] = jnum(evaluate(params, i));
      row["inv_diag"] = jnum(ranking.deltas[j]);
      doc["rows"].push_back(std::move(row));
    }
    emit(config, out, dump(doc));
    return;
  }
  Table table{{"vuix", "measurement_id", "kind", "from_bus", "to_bus", "delta_at_v", "inv_diag"}, {}};
  for (std::size_t j = 0; j < ranking.size(); ++j) {
    const auto i = ranking.order[j];
    const auto label = label_of(model, i);
    table.rows.push_back({std::to_string(j + 1), std::to_string(i + 1), label.kind,
                          label.from_bus, label.to_bus, num(evaluate(params, i)),
                          num(ranking.deltas[j])});
  }
  std::ostringstream os;
  write_csv(os, table);
  emit(config, out, os.str());
}

void cmd_vuix(const ExperimentConfig& config, const SystemModel& model, std::ostream& out) {
  MonteCarloOptions options;
  options.trials = static_cast<std::size_t>(config.trials);
  options.seed = config.seed;
  options.threads = config.threads;
  const auto k = static_cast<std::size_t>(config.k);
  const auto report = monte_carlo_vuix(model, k, {config.lambda, config.v}, options);
  const auto reference = closed_form_ranking(model);
  const auto m = static_cast<std::size_t>(model.measurements());

  if (config.format == OutputFormat::Json) {
    json doc = model_json(config, model);
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "vuix";
    doc["k"] = k;
    doc["trials"] = report.trials;
    doc["seed"] = report.seed;
    doc["existing_attack_variance"] = jnum(report.existing_attack_variance);
    doc["variance_estimator"] = "unbiased";
    doc["measurements"] = json::array();
    for (std::size_t i = 0; i < m; ++i) {
      const auto& s = report.per_measurement[i];
      json row = label_json(model, i);
      row["mean_vuix"] = jnum(s.mean);
      row["var_vuix"] = jnum(s.variance);
      row["coverage"] = s.coverage;
      row["vuix_k0"] = reference.vuix_of[i];
      doc["measurements"].push_back(std::move(row));
    }
    doc["positions"] = json::array();
    doc["pmf"] = json::array();
    for (std::size_t p = 0; p < report.positions.size(); ++p) {
      doc["positions"].push_back({{"position", p + 1},
                                  {"p_flow", jnum(report.positions[p].p_flow)},
                                  {"p_inj", jnum(report.positions[p].p_injection)}});
      doc["pmf"].push_back({{"vuix", p + 1},
                            {"p_flow", jnum(report.flow_pmf[p])},
                            {"p_inj", jnum(report.injection_pmf[p])}});
    }
    emit(config, out, dump(doc));
    return;
  }

  Table measurements{{"measurement_id", "kind", "mean_vuix", "var_vuix", "coverage", "vuix_k0"}, {}};
  for (std::size_t i = 0; i < m; ++i) {
    const auto& s = report.per_measurement[i];
    measurements.rows.push_back({std::to_string(i + 1), label_of(model, i).kind, num(s.mean),
                                 num(s.variance), std::to_string(s.coverage),
                                 std::to_string(reference.vuix_of[i])});
  }
  Table positions{{"position", "p_flow", "p_inj"}, {}};
  Table pmf{{"vuix", "p_flow", "p_inj"}, {}};
  for (std::size_t p = 0; p < report.positions.size(); ++p) {
    positions.rows.push_back({std::to_string(p + 1), num(report.positions[p].p_flow),
                              num(report.positions[p].p_injection)});
    pmf.rows.push_back(
        {std::to_string(p + 1), num(report.flow_pmf[p]), num(report.injection_pmf[p])});
  }

  const std::pair<const char*, const Table*> tables[] = {
      {"measurements", &measurements}, {"positions", &positions}, {"pmf", &pmf}};
  if (config.out_path.empty()) {
    bool first = true;
    for (const auto& [name, table] : tables) {
      if (!first) out << '\n';
      first = false;
      write_csv(out, *table);
    }
    return;
  }
  std::string prefix = config.out_path;
  if (prefix.size() > 4 && prefix.substr(prefix.size() - 4) == ".csv") {
    prefix.resize(prefix.size() - 4);
  }
  for (const auto& [name, table] : tables) {
    std::ostringstream os;
    write_csv(os, *table);
    write_file(prefix + "_" + name + ".csv", os.str());
  }
}

void cmd_attack(const ExperimentConfig& config, const SystemModel& model, std::ostream& out) {
  const auto m = model.measurements();
  const double lambda = config.lambda;

  if (config.sparse) {
    const auto attack = single_sensor_attack(model, lambda);
    const auto cov = attack.covariance(m);
    const double info = mutual_information(model, cov);
    const double kl = kl_divergence(model, cov);
    const double cost = info + lambda * kl;
    const auto label = label_of(model, attack.index);
    if (config.format == OutputFormat::Json) {
      json doc = model_json(config, model);
      doc["schema_version"] = kSchemaVersion;
      doc["command"] = "attack";
      doc["sparse"] = true;
      json row = label_json(model, attack.index);
      row["variance"] = jnum(attack.variance);
      doc["attack"] = std::move(row);
      doc["mutual_information"] = jnum(info);
      doc["kl_divergence"] = jnum(kl);
      doc["cost"] = jnum(cost);
      emit(config, out, dump(doc));
      return;
    }
    Table table{{"measurement_id", "kind", "from_bus", "to_bus", "variance", "mutual_information",
                 "kl_divergence", "cost"},
                {{std::to_string(attack.index + 1), label.kind, label.from_bus, label.to_bus,
                  num(attack.variance), num(info), num(kl), num(cost)}}};
    std::ostringstream os;
    write_csv(os, table);
    emit(config, out, os.str());
    return;
  }

  const auto attack = optimal_gaussian_attack(model, lambda);
  const double info = mutual_information(model, attack);
  const double kl = kl_divergence(model, attack);
  const double cost = info + lambda * kl;
  if (config.format == OutputFormat::Json) {
    json doc = model_json(config, model);
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "attack";
    doc["sparse"] = false;
    doc["attack_variances"] = json::array();
    for (Eigen::Index i = 0; i < m; ++i) {
      json row = label_json(model, static_cast<std::size_t>(i));
      row["attack_variance"] = jnum(attack.matrix(i, i));
      doc["attack_variances"].push_back(std::move(row));
    }
    doc["mutual_information"] = jnum(info);
    doc["kl_divergence"] = jnum(kl);
    doc["cost"] = jnum(cost);
    emit(config, out, dump(doc));
    return;
  }
  Table variances{{"measurement_id", "kind", "from_bus", "to_bus", "attack_variance"}, {}};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto label = label_of(model, static_cast<std::size_t>(i));
    variances.rows.push_back({std::to_string(i + 1), label.kind, label.from_bus, label.to_bus,
                              num(attack.matrix(i, i))});
  }
  Table summary{{"mutual_information", "kl_divergence", "cost"}, {{num(info), num(kl), num(cost)}}};
  std::ostringstream os;
  write_csv(os, variances);
  os << '\n';
  write_csv(os, summary);
  emit(config, out, os.str());
}

void cmd_cost(const ExperimentConfig& config, const SystemModel& model, std::ostream& out) {
  const auto m = static_cast<std::size_t>(model.measurements());
  const auto id = *config.measurement;
  if (id < 1 || static_cast<std::size_t>(id) > m) {
    throw ConfigError("--measurement must lie in 1.." + std::to_string(m));
  }
  const auto i = static_cast<std::size_t>(id - 1);
  // The existing attack is the set drawn for trial 0 of `vuix` with the same seed.
  auto rng = trial_stream(config.seed, 0);
  const auto state = sample_attacked_set(m, static_cast<std::size_t>(config.k), rng);
  const CostParams params{config.lambda, config.v};
  const double at_v = cost_f(model, state, params, i);
  const double at_zero = cost_f(model, state, {config.lambda, 0.0}, i);
  const double d = delta(model, state, params, i).delta;

  std::string attacked;
  for (auto a : state.attacked_set()) {
    if (!attacked.empty()) attacked.push_back(' ');
    attacked += std::to_string(a + 1);
  }
  const auto label = label_of(model, i);
  if (config.format == OutputFormat::Json) {
    json doc = model_json(config, model);
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "cost";
    json row = label_json(model, i);
    json ids = json::array();
    for (auto a : state.attacked_set()) ids.push_back(a + 1);
    row["attacked"] = std::move(ids);
    row["cost_at_v"] = jnum(at_v);
    row["cost_at_zero"] = jnum(at_zero);
    row["delta"] = jnum(d);
    doc["result"] = std::move(row);
    emit(config, out, dump(doc));
    return;
  }
  Table table{{"measurement_id", "kind", "from_bus", "to_bus", "attacked", "cost_at_v",
               "cost_at_zero", "delta"},
              {{std::to_string(id), label.kind, label.from_bus, label.to_bus, attacked,
                num(at_v), num(at_zero), num(d)}}};
  std::ostringstream os;
  write_csv(os, table);
  emit(config, out, os.str());
}

}  // namespace

void validate(const ExperimentConfig& config) {
  if (!(config.rho >= 0.0 && config.rho < 1.0)) {
    throw InvalidRho("rho must lie in [0, 1), got " + num(config.rho));
  }
  if (!std::isfinite(config.snr_db)) throw ConfigError("snr-db must be finite");
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw ConfigError("lambda must be a nonnegative number, got " + num(config.lambda));
  }
  if (!(config.v >= 0.0) || !std::isfinite(config.v)) {
    throw ConfigError("v must be a nonnegative number, got " + num(config.v));
  }
  if (config.k < 0) throw InvalidK("k must be nonnegative, got " + std::to_string(config.k));
  if (config.trials < 1) {
    throw InvalidTrials("trials must be at least 1, got " + std::to_string(config.trials));
  }
}

SystemModel load_model(const ExperimentConfig& config) {
  const std::string text = read_file(config.case_path);
  const auto first = text.find_first_not_of(" \t\r\n");
  GridCase grid;
  if (first != std::string::npos && text[first] == '{') {
    json doc;
    try {
      doc = json::parse(text);
      if (doc.contains("jacobian")) return model_from_json(doc, config);
    } catch (const json::exception& e) {
      throw MalformedCase(std::string("invalid JSON input: ") + e.what());
    }
    grid = parse_json_case(text);
  } else {
    grid = parse_matpower_case(text);
  }
  auto jacobian = build_dc_jacobian(grid, {config.include_slack});
  auto state_cov = toeplitz_state_covariance(jacobian.states(), config.rho);
  const auto noise = sigma2_from_snr(jacobian, state_cov, config.snr_db);
  return build_system_model(std::move(jacobian), std::move(state_cov), noise);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank power-system measurements by their exposure to data-integrity attacks"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string format = "csv";
  long long measurement = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--case", config.case_path, "Case file (MATPOWER script or JSON)")->required();
    sub->add_option("--snr-db", config.snr_db, "Signal-to-noise ratio in dB")->capture_default_str();
    sub->add_option("--rho", config.rho, "Toeplitz state correlation in [0, 1)")->capture_default_str();
    sub->add_option("--lambda", config.lambda, "Weight of the detection term")->capture_default_str();
    sub->add_option("--v", config.v, "Variance of the probe attack")->capture_default_str();
    sub->add_option("--k", config.k, "Number of already attacked sensors")->capture_default_str();
    sub->add_option("--trials", config.trials, "Monte Carlo trials")->capture_default_str();
    sub->add_option("--seed", config.seed, "RNG seed")->capture_default_str();
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--out", config.out_path, "Output file (prefix for csv tables of `vuix`)");
    sub->add_flag("--include-slack,!--no-include-slack", config.include_slack,
                  "Keep the reference-bus angle as a state variable (default on)");
    sub->add_option("--threads", config.threads, "Worker threads for Monte Carlo (0 = auto)");
  };

  auto* rank = app.add_subcommand("rank", "Closed-form vulnerability ranking of an uncompromised system");
  auto* vuix = app.add_subcommand("vuix", "Monte Carlo VuIx statistics over random attacked sets");
  auto* attack = app.add_subcommand("attack", "Optimal Gaussian or single-sensor attack");
  auto* cost = app.add_subcommand("cost", "Attacker cost and vulnerability of one measurement");
  for (auto* sub : {rank, vuix, attack, cost}) add_common(sub);
  attack->add_flag("--sparse", config.sparse, "Attack a single sensor");
  cost->add_option("--measurement", measurement, "Measurement id (1-based)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  config.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  if (cost->parsed()) config.measurement = measurement;

  try {
    validate(config);
    if (attack->parsed() && !(config.lambda >= 1.0)) {
      throw LambdaBelowOne("lambda must be at least 1 for attack construction, got " +
                           num(config.lambda));
    }
    const auto model = load_model(config);
    if (rank->parsed()) cmd_rank(config, model, out);
    if (vuix->parsed()) cmd_vuix(config, model, out);
    if (attack->parsed()) cmd_attack(config, model, out);
    if (cost->parsed()) cmd_cost(config, model, out);
    return kSuccess;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace vuix::cli
