#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace groupcf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };
enum class Sense { le, ge, eq };
enum class ObjSense { minimize, maximize };

struct VarId {
  std::size_t index = 0;
  friend bool operator==(VarId, VarId) = default;
};

struct RowId {
  std::size_t index = 0;
  friend bool operator==(RowId, RowId) = default;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

// Affine expression sum(coef * var) + constant.
struct LinearExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  LinearExpr& add(VarId var, double coef) {
    terms.push_back({var, coef});
    return *this;
  }
  LinearExpr& add_constant(double c) {
    constant += c;
    return *this;
  }
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lower = 0.0;
  double upper = kInf;
  double objective = 0.0;
  // Branch-and-bound branches on the highest priority fractional binary.
  int priority = 0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

// Linear / mixed-binary model. Variables and rows are addressed by the ids
// returned from the add_* calls; named groups allow formulation code to find
// its variables again after a solve.
class MipModel {
 public:
  VarId add_variable(std::string name, VarKind kind, double lower, double upper,
                     double objective = 0.0);
  VarId add_binary(std::string name, double objective = 0.0) {
    return add_variable(std::move(name), VarKind::binary, 0.0, 1.0, objective);
  }
  VarId add_continuous(std::string name, double lower, double upper, double objective = 0.0) {
    return add_variable(std::move(name), VarKind::continuous, lower, upper, objective);
  }

  // Adds `expr sense rhs`; the expression constant is moved to the right.
  RowId add_constraint(const LinearExpr& expr, Sense sense, double rhs, std::string name = {});

  void set_objective_sense(ObjSense sense) { sense_ = sense; }
  void set_objective(VarId var, double coef) { vars_.at(var.index).objective = coef; }
  void clear_objective();
  void set_objective_constant(double c) { objective_constant_ = c; }
  void set_bounds(VarId var, double lower, double upper);
  void set_priority(VarId var, int priority) { vars_.at(var.index).priority = priority; }

  void add_to_group(const std::string& group, VarId var) { groups_[group].push_back(var); }
  const std::vector<VarId>& group(const std::string& name) const;

  ObjSense objective_sense() const { return sense_; }
  double objective_constant() const { return objective_constant_; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const Variable& variable(VarId var) const { return vars_.at(var.index); }
  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  std::size_t num_binaries() const;

  double evaluate_objective(const std::vector<double>& values) const;
  // Largest bound or row violation of `values`.
  double max_violation(const std::vector<double>& values) const;

  // Throws Error(invalid_model) on non-finite coefficients, bad bounds or
  // references to undeclared variables.
  void check() const;

  // CPLEX LP text format, for cross-checking against external solvers.
  void write_lp(std::ostream& out) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::map<std::string, std::vector<VarId>> groups_;
  ObjSense sense_ = ObjSense::minimize;
  double objective_constant_ = 0.0;
};

struct Tolerances {
  double feasibility = 1e-6;
  double integrality = 1e-6;
  double duality = 1e-6;
  double optimality = 1e-9;
  double pivot = 1e-9;
};

enum class LpStatus { optimal, infeasible, unbounded };

std::string to_string(LpStatus status);

// Duals follow the model's objective sense: for a minimization, a >= row has
// a non-negative dual and a <= row a non-positive one (mirrored for
// maximization), and reduced_costs[j] = c_j - sum_i duals[i] * a_ij.
struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> values;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Dual objective b'y plus the bound terms implied by the reduced costs.
// Returns -inf (minimization) / +inf (maximization) when a reduced cost pushes
// against an infinite bound, i.e. the dual point is infeasible.
double dual_objective(const MipModel& model, const LpSolution& solution);

// Solves the LP relaxation (binary variables treated as continuous in their
// bounds). Throws Error(numerical_breakdown) if the simplex loses accuracy.
LpSolution solve_lp(const MipModel& model, const Tolerances& tol = {});

enum class MipStatus {
  optimal,      // search tree exhausted with an incumbent
  feasible,     // a limit was reached; incumbent available
  infeasible,   // tree exhausted, nothing (better than the cutoff) exists
  no_solution,  // a limit was reached before any incumbent was found
};

std::string to_string(MipStatus status);

struct MipLimits {
  double time_limit = kInf;  // seconds
  std::size_t node_limit = std::numeric_limits<std::size_t>::max();
  std::size_t pool_size = 10;
  // Only solutions strictly better than the cutoff are accepted, and nodes
  // that cannot beat it are pruned.
  std::optional<double> cutoff;
  // Cap on the dense working tableau (rows x columns). Larger models return
  // no_solution with limit_reason "memory".
  std::size_t max_dense_entries = std::size_t{1} << 27;
  std::size_t restart_interval = 1000;
  // Stop once this many distinct solutions beating the cutoff are known.
  std::size_t solution_limit = std::numeric_limits<std::size_t>::max();
};

struct PoolEntry {
  std::vector<double> values;
  double objective = 0.0;
};

struct MipSolution {
  MipStatus status = MipStatus::no_solution;
  std::vector<double> values;
  double objective = 0.0;
  // Valid bound on the optimum (<= objective when minimizing).
  double bound = 0.0;
  // Distinct feasible solutions found, best first.
  std::vector<PoolEntry> pool;
  std::size_t nodes = 0;
  std::size_t lp_iterations = 0;
  std::string limit_reason;

  bool has_incumbent() const {
    return status == MipStatus::optimal || status == MipStatus::feasible;
  }
};

MipSolution solve_mip(const MipModel& model, const MipLimits& limits = {},
                      const Tolerances& tol = {});

}  // namespace groupcf
