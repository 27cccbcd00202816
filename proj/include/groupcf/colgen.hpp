#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcf/classifier.hpp"
#include "groupcf/column.hpp"
#include "groupcf/schema.hpp"
#include "groupcf/solver.hpp"

namespace groupcf {

struct ColgenOptions {
  std::size_t tmax = 1;
  // A column enters the master only if its dual-weighted coverage exceeds
  // 1 + tol_price.
  double tol_price = 1e-6;
  std::size_t max_iterations = 10000;
  double time_limit = kInf;  // seconds, whole run
  bool refine = true;
  std::size_t pricing_pool = 10;
  // Stop each pricing search after this many improving columns; 0 searches
  // to optimality. A search that stops on its own is exhaustive, so an
  // infeasible pricing problem still proves convergence.
  std::size_t pricing_stop = 1;
  std::ostream* trace = nullptr;  // JSON lines, one per iteration
};

struct ColgenState {
  std::vector<Column> active;
  std::vector<Column> pool;  // valid columns not yet priced in
  double lp_value = kInf;
  std::vector<double> duals;
  std::size_t iteration = 0;
};

struct TraceRecord {
  std::size_t iteration = 0;
  double lp_value = 0.0;
  double dual_value = 0.0;
  std::optional<double> pricing_value;  // unset when the pool supplied columns
  std::size_t columns_added = 0;
  std::size_t pool_activated = 0;
  std::size_t active_columns = 0;
  double elapsed = 0.0;
};

nlohmann::json trace_to_json(const TraceRecord& record);

struct ColgenTimings {
  double init = 0.0;
  double master = 0.0;
  double pricing = 0.0;
  double refine = 0.0;
  double final_ip = 0.0;
};

struct ColgenResult {
  GroupExplanation explanation;
  double lp_value = kInf;
  std::size_t lp_lower_bound = 0;  // ceil(lp_value - tol)
  std::vector<double> duals;       // of the last master LP
  bool converged = false;          // pricing proved no improving column
  bool certified = false;          // objective proven optimal
  std::size_t iterations = 0;
  std::vector<Column> columns;     // final active set
  std::vector<TraceRecord> trace;
  ColgenTimings timings;
};

// One sparsest column per instance from the pricing model with that
// instance's z fixed to 1, the others to 0 and objective min sum f.
// Duplicates are merged. Raises Error(infeasible) with the instance ids
// that admit no counterfactual within tmax.
ColgenState initialize(const InstanceSet& instances, const ClassifierModel& model,
                       std::size_t tmax, double time_limit = kInf);

// min sum y  s.t.  sum_k a_ik y_k >= 1 (row i = instance i),  y >= 0, or
// y binary when `integer`. Group "y" lists the column variables in order.
MipModel build_rmp(const ColgenState& state, std::size_t instances, bool integer = false);

// max sum w_i z_i over a positive counterfactual v, the instances z it
// explains and the changed features f, |f| <= tmax. Groups "v", "z", "d",
// "f". Instances with non-positive dual get z fixed to 0.
MipModel build_pricing(const InstanceSet& instances, const ClassifierModel& model,
                       std::size_t tmax, const std::vector<double>& duals);

// A pricing solution read back as a column. `selected` lists the instances
// with z = 1.
struct PricedColumn {
  Column column;
  std::vector<std::size_t> selected;
  double value = 0.0;  // sum of duals over the coverage
};

// Columns from the incumbent and pool of a pricing solve whose objective
// exceeds `threshold`, with features trimmed to those a selected instance
// changes and coverage recomputed over all of S. Drops columns equal to
// one in `known` and non-positive counterfactuals.
std::vector<PricedColumn> extract_columns(const MipModel& pricing, const MipSolution& solution,
                                          const InstanceSet& instances,
                                          const ClassifierModel& model,
                                          const std::vector<double>& duals,
                                          const std::vector<Column>& known, double threshold);

// (a) counterfactual fixed, best assignment; (b) assignment fixed, sparsest
// counterfactual. Results exclude columns already in `known`.
std::vector<PricedColumn> refine(const PricedColumn& column, const std::vector<double>& duals,
                                 const InstanceSet& instances, const ClassifierModel& model,
                                 std::size_t tmax, const std::vector<Column>& known,
                                 double time_limit = kInf);

ColgenResult run_colgen(const InstanceSet& instances, const ClassifierModel& model,
                        const ColgenOptions& options);

}  // namespace groupcf
