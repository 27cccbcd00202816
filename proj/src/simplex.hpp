#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <vector>

#include "groupcf/solver.hpp"

namespace groupcf::detail {

using Clock = std::chrono::steady_clock;
using Deadline = std::optional<Clock::time_point>;

enum class SimplexResult { optimal, infeasible, unbounded, time_limit };

// Dense bounded-variable tableau simplex over
//   min c'x  s.t.  A x + s = b,  lo <= x <= hi,  s bounded by the row sense.
// Maximization models are negated internally. Keeps its tableau between
// calls so that reoptimize() can warm start (dual simplex) after bound
// changes, which is what branch-and-bound needs.
class BoundedSimplex {
 public:
  BoundedSimplex(const MipModel& model, const Tolerances& tol);

  static std::size_t dense_entries(const MipModel& model);

  // Two-phase primal simplex from the slack basis.
  SimplexResult solve(const Deadline& deadline = std::nullopt);
  // Dual simplex from the current basis; falls back to solve() when the
  // basis is unusable.
  SimplexResult reoptimize(const Deadline& deadline = std::nullopt);

  void set_bounds(std::size_t var, double lower, double upper);
  double lower(std::size_t var) const { return lo_[var]; }
  double upper(std::size_t var) const { return hi_[var]; }

  // Internal (minimization) objective, without the model constant.
  double internal_objective() const;
  double objective() const;
  double value(std::size_t var) const { return x_[var]; }
  std::vector<double> primal() const;
  std::vector<double> duals() const;
  std::vector<double> reduced_costs() const;
  std::size_t iterations() const { return iterations_; }

 private:
  enum class Rule { dantzig, bland };

  double& at(std::size_t row, std::size_t col) { return tab_[row * stride_ + col]; }
  double at(std::size_t row, std::size_t col) const { return tab_[row * stride_ + col]; }

  void build_initial_tableau();
  void compute_reduced_costs(const std::vector<double>& cost);
  SimplexResult primal_loop(const Deadline& deadline);
  SimplexResult dual_loop(const Deadline& deadline);
  void pivot(std::size_t row, std::size_t col);
  void shift_nonbasic(std::size_t col, double new_value);
  void drop_artificials();
  // Rebuilds the tableau, basic values and reduced costs from the original
  // data for the current basis. False if the basis cannot be refactored.
  bool refactor();
  // Dual then primal simplex from the current basis.
  SimplexResult warm_start(const Deadline& deadline);
  bool accurate() const;
  bool residual_ok() const;
  // True when row r certifies infeasibility under the current bounds.
  bool proven_infeasible(std::size_t r) const;
  bool expired(const Deadline& deadline) const;

  const Tolerances tol_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t stride_ = 0;
  double sign_ = 1.0;
  double constant_ = 0.0;

  std::vector<double> a_;     // original structural matrix, m x n
  std::vector<double> b_;
  std::vector<double> cost_;  // phase-2 costs over all columns
  std::vector<double> lo_, hi_;
  std::vector<double> row_lo_, row_hi_;  // slack bounds, per row

  std::vector<double> tab_;   // B^-1 [A I art], m x stride_
  std::vector<double> x_;
  std::vector<double> d_;     // reduced costs of the active phase
  std::vector<std::size_t> basis_;
  std::vector<long> row_of_;  // -1 when nonbasic
  std::vector<std::size_t> nz_;

  bool ready_ = false;
  std::size_t iterations_ = 0;
  std::size_t last_factor_ = 0;
};

}  // namespace groupcf::detail
