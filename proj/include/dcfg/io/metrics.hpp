#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "dcfg/dc_solver.hpp"

namespace dcfg::io {

/// One run's worth of results, serialized as a single JSON object on one
/// line (schema field versions the layout). Wall-clock fields are only
/// emitted when include_timing is set, keeping default outputs byte-stable
/// across identical invocations.
struct MetricsRecord {
  int schema = 1;
  std::string problem;     // icp | rpgo | semsim
  std::string problem_id;  // input path or synthetic descriptor
  std::uint64_t seed = 0;
  std::string input_hash;  // fnv1a-64 of the input file, empty when synthetic
  nlohmann::json params = nlohmann::json::object();  // parameter echo

  struct Iteration {
    double objective_before = 0.0;
    double objective_after_discrete = 0.0;
    double objective_after_continuous = 0.0;
    int discrete_changed = 0;
    double continuous_step_norm = 0.0;
    double wall_time_discrete = 0.0;
    double wall_time_continuous = 0.0;
  };
  std::vector<Iteration> iterations;
  int iteration_count = 0;
  double final_objective = 0.0;
  double final_cost = 0.0;  // doubled residual objective, table convention

  std::optional<double> inlier_cost;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> ate;
  std::optional<double> ate_odometry;

  /// Problem-specific outputs (e.g. the final icp transform).
  nlohmann::json extras = nlohmann::json::object();

  bool include_timing = false;
};

nlohmann::json to_json(const MetricsRecord& record);
MetricsRecord metrics_from_json(const nlohmann::json& j);

/// Copies the solver trace into the record.
void fill_trace(MetricsRecord& record, const SolveTrace& trace);

/// Serializes the record as one line and writes it atomically
/// (write-temp-then-rename).
void write_metrics(const std::string& path, const MetricsRecord& record);

/// FNV-1a 64-bit content hash, lowercase hex.
std::string fnv1a64_hex(std::string_view bytes);

/// Whole-file read; throws InvalidArgument when the file cannot be opened.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace dcfg::io
