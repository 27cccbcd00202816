#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcf/schema.hpp"

namespace groupcf {

// A candidate explanation: counterfactual point `values`, the original
// features it is allowed to change, and the instances of S it explains.
struct Column {
  BitVector values;
  std::vector<std::size_t> features;  // sorted original feature ids
  std::vector<std::uint8_t> coverage;  // one entry per instance of S

  std::size_t covered_count() const;
  friend bool operator==(const Column&, const Column&) = default;
};

// Original features on which `instance` and `values` disagree.
std::vector<std::size_t> changed_features(const FeatureSchema& schema,
                                          std::span<const std::uint8_t> instance,
                                          std::span<const std::uint8_t> values);

// True iff every feature where `instance` differs from `values` is in
// `features` (sorted).
bool covers(const FeatureSchema& schema, std::span<const std::uint8_t> instance,
            std::span<const std::uint8_t> values, std::span<const std::size_t> features);

std::vector<std::uint8_t> compute_coverage(const InstanceSet& instances,
                                           std::span<const std::uint8_t> values,
                                           std::span<const std::size_t> features);

Column make_column(const InstanceSet& instances, BitVector values,
                   std::vector<std::size_t> features);

// Identity of a column is the (values, features) pair.
bool same_column(const Column& a, const Column& b);

// no_incumbent: a time, node or memory limit stopped the solve before any
// feasible solution was found.
enum class SolveStatus { optimal, feasible, infeasible, no_incumbent };

std::string to_string(SolveStatus status);

struct GroupExplanation {
  std::vector<Column> columns;
  // Index into `columns` explaining each instance.
  std::vector<std::size_t> assignment;
  std::size_t objective = 0;
  double bound = 0.0;
  SolveStatus status = SolveStatus::optimal;
  std::string limit_reason;  // "time", "nodes" or "memory" when a limit hit
  std::size_t nodes = 0;
  double seconds = 0.0;
};

// First column covering each instance, or nullopt for uncovered ones.
std::vector<std::optional<std::size_t>> first_cover(const InstanceSet& instances,
                                                    std::span<const Column> columns);

nlohmann::json column_to_json(const Column& column);
Column column_from_json(const nlohmann::json& doc);

}  // namespace groupcf
