#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

#include "groupcf/error.hpp"
#include "groupcf/solver.hpp"
#include "simplex.hpp"

namespace groupcf {

using detail::BoundedSimplex;
using detail::Clock;
using detail::Deadline;
using detail::SimplexResult;

LpSolution solve_lp(const MipModel& model, const Tolerances& tol) {
  model.check();
  BoundedSimplex lp(model, tol);
  LpSolution out;
  switch (lp.solve()) {
    case SimplexResult::optimal: out.status = LpStatus::optimal; break;
    case SimplexResult::infeasible: out.status = LpStatus::infeasible; break;
    case SimplexResult::unbounded: out.status = LpStatus::unbounded; break;
    case SimplexResult::time_limit:
      throw Error(Errc::numerical_breakdown, "LP solve interrupted");
  }
  out.iterations = lp.iterations();
  if (out.status == LpStatus::optimal) {
    out.values = lp.primal();
    out.duals = lp.duals();
    out.reduced_costs = lp.reduced_costs();
    out.objective = lp.objective();
  }
  return out;
}

namespace {

struct Node {
  std::vector<std::pair<std::uint32_t, std::uint8_t>> fixes;
  double bound = -kInf;  // internal (minimization) LP bound of the parent
};

class BranchAndBound {
 public:
  BranchAndBound(const MipModel& model, const MipLimits& limits, const Tolerances& tol)
      : model_(model), limits_(limits), tol_(tol), lp_(model, tol) {
    sign_ = model.objective_sense() == ObjSense::minimize ? 1.0 : -1.0;
    const auto& vars = model.variables();
    integral_objective_ = std::abs(model.objective_constant() - std::round(model.objective_constant())) == 0.0;
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (vars[j].kind == VarKind::binary) {
        binaries_.push_back(j);
        if (vars[j].objective != std::round(vars[j].objective)) integral_objective_ = false;
      } else if (vars[j].objective != 0.0) {
        integral_objective_ = false;
      }
    }
    if (limits.time_limit < kInf) {
      deadline_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(limits.time_limit));
    }
    if (limits.cutoff) cutoff_ = sign_ * *limits.cutoff;
  }

  MipSolution run();

 private:
  // Value a new solution must beat (internal sense), or +inf.
  double limit() const { return std::min(incumbent_, cutoff_); }

  bool prunable(double z) const {
    const double lim = limit();
    if (lim == kInf) return false;
    if (integral_objective_) return std::ceil(z - tol_.integrality) >= lim - 1e-9;
    return z >= lim - 1e-9 * std::max(1.0, std::abs(lim));
  }

  void apply(const Node& node) {
    const auto& vars = model_.variables();
    for (std::size_t j : binaries_) lp_.set_bounds(j, vars[j].lower, vars[j].upper);
    for (auto [j, v] : node.fixes) lp_.set_bounds(j, v, v);
  }

  void record(std::vector<double> values);
  const char* out_of_budget() const {
    if (nodes_ >= limits_.node_limit) return "nodes";
    if (pool_.size() >= limits_.solution_limit) return "solutions";
    if (deadline_ && Clock::now() >= *deadline_) return "time";
    return nullptr;
  }

  const MipModel& model_;
  const MipLimits& limits_;
  const Tolerances& tol_;
  BoundedSimplex lp_;
  double sign_ = 1.0;
  bool integral_objective_ = true;
  std::vector<std::size_t> binaries_;
  Deadline deadline_;
  double cutoff_ = kInf;

  double incumbent_ = kInf;
  std::vector<double> best_values_;
  std::map<std::vector<std::uint8_t>, PoolEntry> pool_;
  std::size_t nodes_ = 0;
};

void BranchAndBound::record(std::vector<double> values) {
  for (std::size_t j : binaries_) values[j] = std::round(values[j]);
  if (model_.max_violation(values) > 1e-5) return;
  const double objective = model_.evaluate_objective(values);
  const double internal = sign_ * objective;
  if (cutoff_ < kInf && !(internal < cutoff_ - 1e-9 * std::max(1.0, std::abs(cutoff_)))) return;

  std::vector<std::uint8_t> key;
  key.reserve(binaries_.size());
  for (std::size_t j : binaries_) key.push_back(values[j] > 0.5 ? 1 : 0);
  if (!pool_.count(key)) pool_.emplace(std::move(key), PoolEntry{values, objective});

  if (internal < incumbent_) {
    incumbent_ = internal;
    best_values_ = std::move(values);
  }
}

MipSolution BranchAndBound::run() {
  MipSolution out;
  std::vector<Node> open;
  open.push_back({});
  bool root = true;
  bool interrupted = false;
  double interrupted_bound = kInf;

  while (!open.empty()) {
    if (const char* reason = out_of_budget()) {
      interrupted = true;
      out.limit_reason = reason;
      break;
    }
    if (nodes_ > 0 && nodes_ % limits_.restart_interval == 0 && open.size() > 1) {
      auto best = std::min_element(open.begin(), open.end(), [](const Node& a, const Node& b) {
        return a.bound < b.bound;
      });
      std::iter_swap(best, open.end() - 1);
    }
    Node node = std::move(open.back());
    open.pop_back();
    if (prunable(node.bound)) continue;
    ++nodes_;

    apply(node);
    const SimplexResult r = root ? lp_.solve(deadline_) : lp_.reoptimize(deadline_);
    root = false;
    if (r == SimplexResult::time_limit) {
      interrupted = true;
      out.limit_reason = "time";
      interrupted_bound = node.bound;
      break;
    }
    if (r == SimplexResult::infeasible) continue;
    if (r == SimplexResult::unbounded) {
      throw Error(Errc::numerical_breakdown, "LP relaxation is unbounded");
    }
    const double z = lp_.internal_objective() + sign_ * model_.objective_constant();
    if (prunable(z)) continue;

    std::size_t branch = binaries_.size();
    double most = tol_.integrality;
    int level = std::numeric_limits<int>::min();
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      const double v = lp_.value(binaries_[k]);
      const double frac = std::abs(v - std::round(v));
      if (frac <= tol_.integrality) continue;
      const int p = model_.variables()[binaries_[k]].priority;
      if (p > level || (p == level && frac > most + 1e-12)) {
        level = p;
        most = frac;
        branch = k;
      }
    }
    if (branch == binaries_.size()) {
      record(lp_.primal());
      continue;
    }

    const std::size_t j = binaries_[branch];
    const bool up_first = lp_.value(j) >= 0.5;
    Node down{node.fixes, z};
    down.fixes.emplace_back(static_cast<std::uint32_t>(j), 0);
    Node up{std::move(node.fixes), z};
    up.fixes.emplace_back(static_cast<std::uint32_t>(j), 1);
    if (up_first) {
      open.push_back(std::move(down));
      open.push_back(std::move(up));
    } else {
      open.push_back(std::move(up));
      open.push_back(std::move(down));
    }
  }

  out.nodes = nodes_;
  out.lp_iterations = lp_.iterations();
  for (auto& [key, entry] : pool_) out.pool.push_back(std::move(entry));
  std::sort(out.pool.begin(), out.pool.end(), [&](const PoolEntry& a, const PoolEntry& b) {
    return sign_ * a.objective < sign_ * b.objective;
  });
  if (out.pool.size() > limits_.pool_size) out.pool.resize(limits_.pool_size);

  const bool have = incumbent_ < kInf;
  if (have) {
    out.values = best_values_;
    out.objective = sign_ * incumbent_;
  }
  if (!interrupted) {
    out.status = have ? MipStatus::optimal : MipStatus::infeasible;
    out.bound = have ? out.objective : sign_ * cutoff_;
    return out;
  }
  double bound = std::min(incumbent_, interrupted_bound);
  for (const auto& n : open) bound = std::min(bound, n.bound);
  if (integral_objective_ && bound > -kInf && bound < kInf) {
    bound = std::ceil(bound - tol_.integrality);
  }
  out.bound = sign_ * bound;
  out.status = have ? MipStatus::feasible : MipStatus::no_solution;
  return out;
}

}  // namespace

MipSolution solve_mip(const MipModel& model, const MipLimits& limits, const Tolerances& tol) {
  model.check();
  const double sign = model.objective_sense() == ObjSense::minimize ? 1.0 : -1.0;
  if (BoundedSimplex::dense_entries(model) > limits.max_dense_entries) {
    MipSolution out;
    out.status = MipStatus::no_solution;
    out.limit_reason = "memory";
    out.bound = -sign * kInf;
    return out;
  }
  BranchAndBound search(model, limits, tol);
  return search.run();
}

}  // namespace groupcf
