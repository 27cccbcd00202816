#pragma once

#include <cstddef>
#include <optional>

#include "groupcf/classifier.hpp"
#include "groupcf/column.hpp"
#include "groupcf/schema.hpp"
#include "groupcf/solver.hpp"

namespace groupcf {

struct BaselineConfig {
  std::optional<std::size_t> K;  // defaults to |S|
  std::size_t tmax = 1;
  double time_limit = kInf;
  // Order the slots (y^1 >= y^2 >= ...) and only let instance i use slots
  // 1..i. Both keep at least one optimal solution.
  bool symmetry_breaking = true;
  // Implied rows: f_l >= d_h for every column of group l, a per-instance
  // budget on changed groups and, with symmetry breaking, slots ordered by
  // their smallest member.
  bool tighten = true;
  std::size_t max_dense_entries = MipLimits{}.max_dense_entries;
};

// Monolithic MIP choosing up to K counterfactuals that cover every instance
// with at most tmax changed original features each, minimising their number.
// Variable groups: "y", "v<k>", "a<k>", "d<k>", "f<k>", "xi<k>", "gamma<k>".
MipModel build_baseline(const InstanceSet& instances, const ClassifierModel& model,
                        const BaselineConfig& cfg);

// Solves the baseline MIP and extracts a validated explanation. Raises
// Error(infeasible) with the ids of instances that have no counterfactual
// within tmax. A limit without an incumbent yields status no_incumbent.
GroupExplanation solve_baseline(const InstanceSet& instances, const ClassifierModel& model,
                                const BaselineConfig& cfg);

}  // namespace groupcf
