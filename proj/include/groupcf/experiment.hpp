#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcf/classifier.hpp"
#include "groupcf/schema.hpp"

namespace groupcf {

enum class Method { colgen, baseline, both };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct ExperimentConfig {
  std::filesystem::path schema;
  std::filesystem::path data;
  std::filesystem::path model;
  std::string id_column;     // optional
  std::string label_column;  // optional, ignored by the solvers
  Method method = Method::colgen;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> tmax;
  double time_limit = 3600.0;  // seconds per method and cell
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";
};

// Relative paths in the document resolve against `base`. Raises
// Error(invalid_config) on missing fields, empty grids or unknown methods.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
  std::size_t size = 0;
  std::size_t tmax = 0;
  std::optional<std::size_t> best;  // smallest objective found
  std::optional<long> gap;          // colgen - baseline, when both have one
  std::optional<std::size_t> cg_objective;
  std::optional<std::size_t> mip_objective;
  std::optional<std::size_t> lp_bound;  // ceil of the final master LP
  std::string cg_status;                // empty when the method did not run
  std::string mip_status;
  bool cg_certified = false;
  bool mip_certified = false;
  double cg_time = 0.0;
  double mip_time = 0.0;
};

// colgen - baseline when both produced an explanation; negative favours
// column generation.
std::optional<long> cell_gap(std::optional<std::size_t> colgen, std::optional<std::size_t> baseline);

// k distinct indices of [0, n), uniformly at random, as a function of seed
// and k only. Sorted.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

// Rows of `data` the model classifies negative, in file order.
InstanceSet negative_instances(const InstanceSet& data, const ClassifierModel& model);

// One row per (size, tmax) cell, sizes outer. Writes results.csv,
// timings.csv, explanations.json and per-cell heatmap, frequency and trace
// files into the output directory.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

// Deterministic columns only; times go to timings_csv.
std::string results_csv(const std::vector<ResultRow>& rows);
std::string timings_csv(const std::vector<ResultRow>& rows);

}  // namespace groupcf
