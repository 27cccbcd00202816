#include <algorithm>
#include <cmath>
#include <iomanip>

#include "groupcf/error.hpp"
#include "groupcf/solver.hpp"

namespace groupcf {

VarId MipModel::add_variable(std::string name, VarKind kind, double lower, double upper,
                             double objective) {
  if (name.empty()) name = "x" + std::to_string(vars_.size());
  vars_.push_back({std::move(name), kind, lower, upper, objective});
  return VarId{vars_.size() - 1};
}

RowId MipModel::add_constraint(const LinearExpr& expr, Sense sense, double rhs, std::string name) {
  if (name.empty()) name = "c" + std::to_string(rows_.size());
  Constraint row{std::move(name), {}, sense, rhs - expr.constant};
  // Merge repeated variables so the row stays canonical.
  for (const auto& term : expr.terms) {
    auto it = std::find_if(row.terms.begin(), row.terms.end(),
                           [&](const Term& t) { return t.var == term.var; });
    if (it == row.terms.end()) {
      row.terms.push_back(term);
    } else {
      it->coef += term.coef;
    }
  }
  rows_.push_back(std::move(row));
  return RowId{rows_.size() - 1};
}

void MipModel::clear_objective() {
  for (auto& v : vars_) v.objective = 0.0;
  objective_constant_ = 0.0;
}

void MipModel::set_bounds(VarId var, double lower, double upper) {
  auto& v = vars_.at(var.index);
  v.lower = lower;
  v.upper = upper;
}

const std::vector<VarId>& MipModel::group(const std::string& name) const {
  static const std::vector<VarId> empty;
  auto it = groups_.find(name);
  return it == groups_.end() ? empty : it->second;
}

std::size_t MipModel::num_binaries() const {
  return static_cast<std::size_t>(std::count_if(
      vars_.begin(), vars_.end(), [](const Variable& v) { return v.kind == VarKind::binary; }));
}

double MipModel::evaluate_objective(const std::vector<double>& values) const {
  double total = objective_constant_;
  for (std::size_t j = 0; j < vars_.size(); ++j) total += vars_[j].objective * values.at(j);
  return total;
}

double MipModel::max_violation(const std::vector<double>& values) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max({worst, vars_[j].lower - values.at(j), values.at(j) - vars_[j].upper});
  }
  for (const auto& row : rows_) {
    double lhs = 0.0;
    for (const auto& t : row.terms) lhs += t.coef * values.at(t.var.index);
    switch (row.sense) {
      case Sense::le: worst = std::max(worst, lhs - row.rhs); break;
      case Sense::ge: worst = std::max(worst, row.rhs - lhs); break;
      case Sense::eq: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

void MipModel::check() const {
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper ||
        !std::isfinite(v.objective) || v.lower == kInf || v.upper == -kInf) {
      throw Error(Errc::invalid_model, "variable '" + v.name + "' has invalid bounds or cost");
    }
    if (v.kind == VarKind::binary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw Error(Errc::invalid_model, "binary variable '" + v.name + "' bounds exceed [0,1]");
    }
  }
  for (const auto& row : rows_) {
    if (!std::isfinite(row.rhs)) {
      throw Error(Errc::invalid_model, "constraint '" + row.name + "' has a non-finite rhs");
    }
    for (const auto& t : row.terms) {
      if (t.var.index >= vars_.size()) {
        throw Error(Errc::invalid_model, "constraint '" + row.name + "' references an unknown variable");
      }
      if (!std::isfinite(t.coef)) {
        throw Error(Errc::invalid_model, "constraint '" + row.name + "' has a non-finite coefficient");
      }
    }
  }
}

namespace {

void write_terms(std::ostream& out, const std::vector<Variable>& vars,
                 const std::vector<Term>& terms) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    out << (t.coef < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    if (std::abs(t.coef) != 1.0) out << std::abs(t.coef) << ' ';
    out << vars[t.var.index].name;
    first = false;
  }
  if (first) out << "0";
}

}  // namespace

void MipModel::write_lp(std::ostream& out) const {
  out << std::setprecision(17);
  out << (sense_ == ObjSense::minimize ? "Minimize" : "Maximize") << "\n obj: ";
  std::vector<Term> obj;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].objective != 0.0) obj.push_back({VarId{j}, vars_[j].objective});
  }
  write_terms(out, vars_, obj);
  out << "\nSubject To\n";
  for (const auto& row : rows_) {
    out << ' ' << row.name << ": ";
    write_terms(out, vars_, row.terms);
    out << (row.sense == Sense::le ? " <= " : row.sense == Sense::ge ? " >= " : " = ") << row.rhs
        << '\n';
  }
  out << "Bounds\n";
  for (const auto& v : vars_) {
    if (v.kind == VarKind::binary && v.lower == 0.0 && v.upper == 1.0) continue;
    out << ' ';
    if (v.lower == -kInf) {
      out << "-inf";
    } else {
      out << v.lower;
    }
    out << " <= " << v.name << " <= ";
    if (v.upper == kInf) {
      out << "+inf";
    } else {
      out << v.upper;
    }
    out << '\n';
  }
  out << "Binaries\n";
  for (const auto& v : vars_) {
    if (v.kind == VarKind::binary) out << ' ' << v.name << '\n';
  }
  out << "End\n";
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

std::string to_string(MipStatus status) {
  switch (status) {
    case MipStatus::optimal: return "optimal";
    case MipStatus::feasible: return "feasible";
    case MipStatus::infeasible: return "infeasible";
    case MipStatus::no_solution: return "no_solution";
  }
  return "unknown";
}

double dual_objective(const MipModel& model, const LpSolution& solution) {
  // Work in minimization form; flip back at the end.
  const double sign = model.objective_sense() == ObjSense::minimize ? 1.0 : -1.0;
  double total = model.objective_constant() * sign;
  const auto& rows = model.constraints();
  for (std::size_t i = 0; i < rows.size(); ++i) total += sign * solution.duals.at(i) * rows[i].rhs;
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const double d = sign * solution.reduced_costs.at(j);
    if (d > 0.0) {
      if (vars[j].lower == -kInf) {
        if (d > 1e-9) return sign * -kInf;
        continue;
      }
      total += d * vars[j].lower;
    } else if (d < 0.0) {
      if (vars[j].upper == kInf) {
        if (d < -1e-9) return sign * -kInf;
        continue;
      }
      total += d * vars[j].upper;
    }
  }
  return sign * total;
}

}  // namespace groupcf
