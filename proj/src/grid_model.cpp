#include "vuix/grid_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "vuix/errors.hpp"

namespace vuix {

namespace {

using Matrix = std::vector<std::vector<double>>;

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '\n') {
      in_comment = false;
    } else if (c == '%') {
      in_comment = true;
    }
    if (!in_comment) out.push_back(c);
  }
  return out;
}

double parse_number(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end || token.empty()) {
    throw MalformedCase("non-numeric token '" + std::string(token) + "'");
  }
  return value;
}

Matrix parse_matrix_body(const std::string& body, const std::string& what) {
  Matrix rows;
  std::string row_text;
  auto flush_row = [&]() {
    std::vector<double> row;
    std::string token;
    auto flush_token = [&]() {
      if (!token.empty()) row.push_back(parse_number(token));
      token.clear();
    };
    for (char c : row_text) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        flush_token();
      } else {
        token.push_back(c);
      }
    }
    flush_token();
    row_text.clear();
    if (row.empty()) return;
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw MalformedCase("ragged rows in mpc." + what);
    }
    rows.push_back(std::move(row));
  };
  for (char c : body) {
    if (c == ';' || c == '\n') {
      flush_row();
    } else {
      row_text.push_back(c);
    }
  }
  flush_row();
  return rows;
}

Matrix find_matrix(const std::string& text, const std::string& what) {
  const std::regex pattern("mpc\\." + what + "\\s*=\\s*\\[([^\\]]*)\\]");
  std::smatch match;
  if (!std::regex_search(text, match, pattern)) {
    throw MalformedCase("missing matrix mpc." + what);
  }
  return parse_matrix_body(match[1].str(), what);
}

int as_integer(double value, const char* what) {
  if (!std::isfinite(value) || value != std::floor(value)) {
    throw MalformedCase(std::string(what) + " must be an integer");
  }
  return static_cast<int>(value);
}

BusType bus_type_from_code(int code) {
  if (code < 1 || code > 4) {
    throw MalformedCase("bus type code " + std::to_string(code) + " is not 1..4");
  }
  return static_cast<BusType>(code);
}

BusType bus_type_from_json(const nlohmann::json& value) {
  if (value.is_number_integer()) return bus_type_from_code(value.get<int>());
  if (value.is_string()) {
    const auto name = value.get<std::string>();
    if (name == "PQ") return BusType::PQ;
    if (name == "PV") return BusType::PV;
    if (name == "REF") return BusType::REF;
    if (name == "ISOLATED") return BusType::ISOLATED;
  }
  throw MalformedCase("unrecognised bus type " + value.dump());
}

std::string format_exact(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

}  // namespace

std::size_t GridCase::in_service_branch_count() const {
  return static_cast<std::size_t>(std::count_if(
      branches.begin(), branches.end(), [](const auto& b) { return b.in_service; }));
}

std::size_t GridCase::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return i;
  }
  throw InvalidTopology("unknown bus " + std::to_string(bus_id));
}

void validate_case(const GridCase& grid) {
  if (grid.buses.empty()) throw MalformedCase("case has no buses");
  if (!(grid.base_mva > 0.0)) throw MalformedCase("baseMVA must be positive");
  std::unordered_set<int> ids;
  for (const auto& bus : grid.buses) {
    if (bus.id <= 0) throw MalformedCase("bus ids must be positive");
    if (!ids.insert(bus.id).second) {
      throw InvalidTopology("duplicate bus id " + std::to_string(bus.id));
    }
  }
  for (std::size_t k = 0; k < grid.branches.size(); ++k) {
    const auto& br = grid.branches[k];
    const auto label = "branch " + std::to_string(k + 1);
    if (!ids.contains(br.from_bus) || !ids.contains(br.to_bus)) {
      throw InvalidTopology(label + " references an unknown bus (" +
                            std::to_string(br.from_bus) + " -> " +
                            std::to_string(br.to_bus) + ")");
    }
    if (br.from_bus == br.to_bus) {
      throw InvalidTopology(label + " connects bus " + std::to_string(br.from_bus) +
                            " to itself");
    }
    if (br.in_service && !(br.reactance > 0.0)) {
      throw NonpositiveReactance(label + " has reactance " + format_exact(br.reactance));
    }
  }
  if (grid.in_service_branch_count() == 0) {
    throw NoInServiceBranch("case has no in-service branch");
  }
}

GridCase parse_matpower_case(std::string_view raw) {
  const std::string text = strip_comments(raw);
  GridCase grid;

  std::smatch match;
  static const std::regex name_re("function\\s+\\w+\\s*=\\s*(\\w+)");
  grid.name = std::regex_search(text, match, name_re) ? match[1].str() : "case";

  static const std::regex base_re("mpc\\.baseMVA\\s*=\\s*([^;\\n]+);");
  if (!std::regex_search(text, match, base_re)) {
    throw MalformedCase("missing mpc.baseMVA");
  }
  auto base_token = match[1].str();
  base_token.erase(std::remove_if(base_token.begin(), base_token.end(),
                                  [](unsigned char c) { return std::isspace(c); }),
                   base_token.end());
  grid.base_mva = parse_number(base_token);

  for (const auto& row : find_matrix(text, "bus")) {
    if (row.size() < 2) throw MalformedCase("bus rows need at least 2 columns");
    grid.buses.push_back({as_integer(row[0], "BUS_I"),
                          bus_type_from_code(as_integer(row[1], "BUS_TYPE"))});
  }
  for (const auto& row : find_matrix(text, "branch")) {
    if (row.size() < 4) throw MalformedCase("branch rows need at least 4 columns");
    BranchRecord br;
    br.from_bus = as_integer(row[0], "F_BUS");
    br.to_bus = as_integer(row[1], "T_BUS");
    br.reactance = row[3];
    br.in_service = row.size() < 11 || row[10] != 0.0;
    grid.branches.push_back(br);
  }
  validate_case(grid);
  return grid;
}

GridCase parse_json_case(std::string_view text) {
  GridCase grid;
  try {
    const auto doc = nlohmann::json::parse(text);
    grid.name = doc.value("name", std::string("case"));
    grid.base_mva = doc.value("base_mva", 100.0);
    for (const auto& bus : doc.at("buses")) {
      grid.buses.push_back({bus.at("id").get<int>(),
                            bus.contains("type") ? bus_type_from_json(bus.at("type"))
                                                 : BusType::PQ});
    }
    for (const auto& branch : doc.at("branches")) {
      BranchRecord br;
      br.from_bus = branch.at("from").get<int>();
      br.to_bus = branch.at("to").get<int>();
      br.reactance = branch.at("x").get<double>();
      if (branch.contains("status")) {
        const auto& status = branch.at("status");
        br.in_service = status.is_boolean() ? status.get<bool>() : status.get<double>() != 0.0;
      }
      grid.branches.push_back(br);
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedCase(std::string("invalid JSON case: ") + e.what());
  }
  validate_case(grid);
  return grid;
}

std::string to_matpower_text(const GridCase& grid) {
  std::ostringstream os;
  os << "function mpc = " << grid.name << "\n\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << format_exact(grid.base_mva) << ";\n\n";
  os << "%% bus data\n%\tbus_i\ttype\nmpc.bus = [\n";
  for (const auto& bus : grid.buses) {
    os << '\t' << bus.id << '\t' << static_cast<int>(bus.type) << ";\n";
  }
  os << "];\n\n%% branch data\n"
     << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\n"
     << "mpc.branch = [\n";
  for (const auto& br : grid.branches) {
    os << '\t' << br.from_bus << '\t' << br.to_bus << "\t0\t" << format_exact(br.reactance)
       << "\t0\t0\t0\t0\t0\t0\t" << (br.in_service ? 1 : 0) << ";\n";
  }
  os << "];\n";
  return os.str();
}

GridCase load_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedCase("cannot open case file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_case(text);
  return parse_matpower_case(text);
}

const char* kind_name(MeasurementDescriptor::Kind kind) {
  return kind == MeasurementDescriptor::Kind::Flow ? "flow" : "injection";
}

JacobianMatrix JacobianMatrix::unlabeled(Eigen::MatrixXd h) {
  JacobianMatrix jac;
  jac.entries = std::move(h);
  return jac;
}

JacobianMatrix build_dc_jacobian(const GridCase& grid, DcOptions options) {
  validate_case(grid);
  const auto n_bus = static_cast<Eigen::Index>(grid.buses.size());
  const auto n_flow = static_cast<Eigen::Index>(grid.in_service_branch_count());

  // Flow rows F and the signed incidence A (+1 at from, -1 at to); the
  // injection block is A^T F, so each injection row is the signed sum of its
  // incident flow rows.
  Eigen::MatrixXd flows = Eigen::MatrixXd::Zero(n_flow, n_bus);
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(n_flow, n_bus);
  JacobianMatrix jac;
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < grid.branches.size(); ++k) {
    const auto& br = grid.branches[k];
    if (!br.in_service) continue;
    const auto from = static_cast<Eigen::Index>(grid.bus_index(br.from_bus));
    const auto to = static_cast<Eigen::Index>(grid.bus_index(br.to_bus));
    const double susceptance = 1.0 / br.reactance;
    flows(row, from) = susceptance;
    flows(row, to) = -susceptance;
    incidence(row, from) = 1.0;
    incidence(row, to) = -1.0;
    jac.rows.push_back({static_cast<std::size_t>(row), MeasurementDescriptor::Kind::Flow,
                        br.from_bus, br.to_bus, k});
    ++row;
  }
  for (const auto& bus : grid.buses) {
    jac.rows.push_back({static_cast<std::size_t>(row++),
                        MeasurementDescriptor::Kind::Injection, bus.id, 0, 0});
  }

  Eigen::MatrixXd h(n_flow + n_bus, n_bus);
  h.topRows(n_flow) = flows;
  h.bottomRows(n_bus) = incidence.transpose() * flows;

  std::vector<int> state_buses;
  for (const auto& bus : grid.buses) state_buses.push_back(bus.id);

  if (!options.include_slack) {
    auto slack = std::find_if(grid.buses.begin(), grid.buses.end(),
                              [](const auto& b) { return b.type == BusType::REF; });
    const auto drop = slack == grid.buses.end() ? Eigen::Index{0}
                                                : static_cast<Eigen::Index>(slack - grid.buses.begin());
    Eigen::MatrixXd reduced(h.rows(), n_bus - 1);
    reduced.leftCols(drop) = h.leftCols(drop);
    reduced.rightCols(n_bus - 1 - drop) = h.rightCols(n_bus - 1 - drop);
    h = std::move(reduced);
    state_buses.erase(state_buses.begin() + drop);
  }

  jac.entries = std::move(h);
  jac.state_buses = std::move(state_buses);
  return jac;
}

}  // namespace vuix
