#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "groupcf/classifier.hpp"
#include "groupcf/column.hpp"
#include "groupcf/schema.hpp"

namespace groupcf {

struct Violation {
  std::string kind;  // coverage, positivity, sparsity, onehot, consistency, assignment
  std::optional<std::size_t> column;
  std::optional<std::size_t> instance;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t columns_checked = 0;
  std::size_t instances_checked = 0;

  bool ok() const { return violations.empty(); }
};

// Re-derives everything from scratch: every instance explained by its
// assigned column, every column positive, schema-valid and within tmax
// changed features, stored coverage equal to recomputed coverage.
ValidationReport validate_explanation(const InstanceSet& instances, const ClassifierModel& model,
                                      const GroupExplanation& explanation, std::size_t tmax);

// Throws Error(not_negative) listing every instance the model already
// classifies positive.
void require_negative(const InstanceSet& instances, const ClassifierModel& model);

}  // namespace groupcf
