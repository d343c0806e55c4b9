#include "dcfg/io/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dcfg::io {

namespace {

void put_optional(nlohmann::json& j, const char* name, const std::optional<double>& v) {
  if (v) j[name] = *v;
}

std::optional<double> get_optional(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) return std::nullopt;
  return j.at(name).get<double>();
}

}  // namespace

nlohmann::json to_json(const MetricsRecord& record) {
  nlohmann::json j;
  j["schema"] = record.schema;
  j["problem"] = record.problem;
  j["problem_id"] = record.problem_id;
  j["seed"] = record.seed;
  if (!record.input_hash.empty()) j["input_hash"] = record.input_hash;
  j["params"] = record.params;
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& it : record.iterations) {
    nlohmann::json ji;
    ji["objective_before"] = it.objective_before;
    ji["objective_after_discrete"] = it.objective_after_discrete;
    ji["objective_after_continuous"] = it.objective_after_continuous;
    ji["discrete_changed"] = it.discrete_changed;
    ji["continuous_step_norm"] = it.continuous_step_norm;
    if (record.include_timing) {
      ji["wall_time_discrete"] = it.wall_time_discrete;
      ji["wall_time_continuous"] = it.wall_time_continuous;
    }
    iters.push_back(std::move(ji));
  }
  j["iterations"] = std::move(iters);
  j["iteration_count"] = record.iteration_count;
  j["final_objective"] = record.final_objective;
  j["final_cost"] = record.final_cost;
  put_optional(j, "inlier_cost", record.inlier_cost);
  put_optional(j, "precision", record.precision);
  put_optional(j, "recall", record.recall);
  put_optional(j, "ate", record.ate);
  put_optional(j, "ate_odometry", record.ate_odometry);
  if (!record.extras.empty()) j["extras"] = record.extras;
  return j;
}

MetricsRecord metrics_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.schema = j.at("schema").get<int>();
  r.problem = j.at("problem").get<std::string>();
  r.problem_id = j.at("problem_id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("input_hash")) r.input_hash = j.at("input_hash").get<std::string>();
  r.params = j.at("params");
  for (const auto& ji : j.at("iterations")) {
    MetricsRecord::Iteration it;
    it.objective_before = ji.at("objective_before").get<double>();
    it.objective_after_discrete = ji.at("objective_after_discrete").get<double>();
    it.objective_after_continuous = ji.at("objective_after_continuous").get<double>();
    it.discrete_changed = ji.at("discrete_changed").get<int>();
    if (ji.contains("continuous_step_norm")) {
      it.continuous_step_norm = ji.at("continuous_step_norm").get<double>();
    }
    if (ji.contains("wall_time_discrete")) {
      it.wall_time_discrete = ji.at("wall_time_discrete").get<double>();
      it.wall_time_continuous = ji.at("wall_time_continuous").get<double>();
      r.include_timing = true;
    }
    r.iterations.push_back(it);
  }
  r.iteration_count = j.at("iteration_count").get<int>();
  r.final_objective = j.at("final_objective").get<double>();
  r.final_cost = j.at("final_cost").get<double>();
  r.inlier_cost = get_optional(j, "inlier_cost");
  r.precision = get_optional(j, "precision");
  r.recall = get_optional(j, "recall");
  r.ate = get_optional(j, "ate");
  r.ate_odometry = get_optional(j, "ate_odometry");
  if (j.contains("extras")) r.extras = j.at("extras");
  return r;
}

void fill_trace(MetricsRecord& record, const SolveTrace& trace) {
  record.iterations.clear();
  for (const auto& it : trace.iterations) {
    MetricsRecord::Iteration mi;
    mi.objective_before = it.objective_before;
    mi.objective_after_discrete = it.objective_after_discrete;
    mi.objective_after_continuous = it.objective_after_continuous;
    mi.discrete_changed = it.discrete_changed;
    mi.continuous_step_norm = it.continuous_step_norm;
    mi.wall_time_discrete = it.wall_time_discrete;
    mi.wall_time_continuous = it.wall_time_continuous;
    record.iterations.push_back(mi);
  }
  record.iteration_count = static_cast<int>(trace.iterations.size());
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open file for writing: " + tmp);
    out << contents;
    if (!out) throw InvalidArgument("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw InvalidArgument("rename failed: " + tmp + " -> " + path);
  }
}

void write_metrics(const std::string& path, const MetricsRecord& record) {
  write_file_atomic(path, to_json(record).dump() + "\n");
}

}  // namespace dcfg::io
