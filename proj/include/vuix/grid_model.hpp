#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vuix {

enum class BusType { PQ = 1, PV = 2, REF = 3, ISOLATED = 4 };

struct BusRecord {
  int id = 0;
  BusType type = BusType::PQ;

  friend bool operator==(const BusRecord&, const BusRecord&) = default;
};

struct BranchRecord {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per unit
  bool in_service = true;

  friend bool operator==(const BranchRecord&, const BranchRecord&) = default;
};

struct GridCase {
  std::string name;
  std::vector<BusRecord> buses;
  std::vector<BranchRecord> branches;
  double base_mva = 100.0;

  std::size_t in_service_branch_count() const;
  /// Position of `bus_id` in `buses`; throws InvalidTopology if absent.
  std::size_t bus_index(int bus_id) const;

  friend bool operator==(const GridCase&, const GridCase&) = default;
};

/// Checks every GridCase invariant, throwing the matching typed error.
void validate_case(const GridCase& grid);

/// Parses the MATPOWER case-script subset: `mpc.baseMVA`, `mpc.bus` and
/// `mpc.branch`. Only BUS_I/BUS_TYPE and F_BUS/T_BUS/BR_X/BR_STATUS are read.
/// Branch rows with fewer than 11 columns are treated as in service.
GridCase parse_matpower_case(std::string_view text);

/// Parses `{name, base_mva, buses:[{id,type}], branches:[{from,to,x,status}]}`.
GridCase parse_json_case(std::string_view text);

/// Regenerates a MATPOWER script that parses back to the same GridCase.
std::string to_matpower_text(const GridCase& grid);

/// Reads a case file, picking the JSON or MATPOWER parser by content.
GridCase load_case_file(const std::string& path);

struct MeasurementDescriptor {
  enum class Kind { Flow, Injection };

  std::size_t row = 0;  // zero-based row of H
  Kind kind = Kind::Flow;
  int from_bus = 0;     // flow origin, or the injection bus
  int to_bus = 0;       // flow destination; 0 for injections
  std::size_t branch_ordinal = 0;  // position in GridCase::branches (flows only)

  bool is_flow() const { return kind == Kind::Flow; }
  bool is_injection() const { return kind == Kind::Injection; }

  friend bool operator==(const MeasurementDescriptor&,
                         const MeasurementDescriptor&) = default;
};

const char* kind_name(MeasurementDescriptor::Kind kind);

/// Dense measurement Jacobian. `rows` is empty for models that were not
/// derived from a grid case; otherwise it labels every row of `entries`.
struct JacobianMatrix {
  Eigen::MatrixXd entries;
  std::vector<MeasurementDescriptor> rows;
  std::vector<int> state_buses;  // bus id of each column

  Eigen::Index measurements() const { return entries.rows(); }
  Eigen::Index states() const { return entries.cols(); }
  bool labeled() const { return !rows.empty(); }

  static JacobianMatrix unlabeled(Eigen::MatrixXd h);
};

struct DcOptions {
  /// Keep the reference-bus angle as a state variable. When false, the
  /// column of the first REF bus (or the first bus if none) is removed.
  bool include_slack = true;
};

/// DC measurement Jacobian: one flow row per in-service branch in file order,
/// oriented from -> to, followed by one injection row per bus in file order.
JacobianMatrix build_dc_jacobian(const GridCase& grid, DcOptions options = {});

}  // namespace vuix
