#include "groupcf/colgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "groupcf/error.hpp"
#include "groupcf/validate.hpp"

namespace groupcf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool contains(const std::vector<Column>& columns, const Column& c) {
  return std::any_of(columns.begin(), columns.end(),
                     [&](const Column& o) { return same_column(o, c); });
}

double priced_value(const Column& c, const std::vector<double>& duals) {
  double total = 0.0;
  for (std::size_t i = 0; i < c.coverage.size(); ++i) {
    if (c.coverage[i]) total += duals[i];
  }
  return total;
}

void check_inputs(const InstanceSet& instances, const ClassifierModel& model, std::size_t tmax) {
  validate_instance_set(instances);
  const FeatureSchema& schema = *instances.schema;
  if (model.input_width() != schema.expanded_size()) {
    throw Error(Errc::dimension_mismatch,
                "model expects " + std::to_string(model.input_width()) + " inputs, schema has " +
                    std::to_string(schema.expanded_size()) + " expanded columns");
  }
  if (tmax < 1 || tmax > schema.original_size()) {
    throw Error(Errc::invalid_config,
                "tmax must lie in [1, " + std::to_string(schema.original_size()) + "]");
  }
  require_negative(instances, model);
  if (model.logit_bounds().upper < model.threshold_logit()) {
    throw Error(Errc::infeasible_encoding, "no input can reach the classification threshold");
  }
}

// Reads one pricing solution as a column; nullopt if v is not positive.
std::optional<PricedColumn> read_solution(const MipModel& pricing,
                                          const std::vector<double>& values,
                                          const InstanceSet& instances,
                                          const ClassifierModel& model,
                                          const std::vector<double>& duals) {
  const FeatureSchema& schema = *instances.schema;
  const auto& vg = pricing.group("v");
  const auto& zg = pricing.group("z");
  const auto& fg = pricing.group("f");
  BitVector v(vg.size());
  for (std::size_t h = 0; h < vg.size(); ++h) v[h] = values[vg[h].index] > 0.5 ? 1 : 0;
  if (!schema.is_valid(v) || !model.is_positive(v)) return std::nullopt;

  PricedColumn out;
  std::vector<bool> changed(schema.original_size(), false);
  for (std::size_t i = 0; i < zg.size(); ++i) {
    if (values[zg[i].index] <= 0.5) continue;
    out.selected.push_back(i);
    for (std::size_t l : changed_features(schema, instances[i].values, v)) changed[l] = true;
  }
  std::vector<std::size_t> features;
  for (std::size_t l = 0; l < fg.size(); ++l) {
    if (values[fg[l].index] > 0.5 && changed[l]) features.push_back(l);
  }
  out.column = make_column(instances, std::move(v), std::move(features));
  out.value = priced_value(out.column, duals);
  return out;
}

void add_unique(std::vector<PricedColumn>& into, PricedColumn c, const std::vector<Column>& known) {
  if (contains(known, c.column)) return;
  for (const auto& o : into) {
    if (same_column(o.column, c.column)) return;
  }
  into.push_back(std::move(c));
}

MipLimits limits_for(double time_limit) {
  MipLimits limits;
  limits.time_limit = time_limit;
  return limits;
}

}  // namespace

nlohmann::json trace_to_json(const TraceRecord& r) {
  nlohmann::json doc{{"iteration", r.iteration},
                     {"lp_value", r.lp_value},
                     {"dual_value", r.dual_value},
                     {"pricing_value", nullptr},
                     {"columns_added", r.columns_added},
                     {"pool_activated", r.pool_activated},
                     {"active_columns", r.active_columns},
                     {"elapsed", r.elapsed}};
  if (r.pricing_value) doc["pricing_value"] = *r.pricing_value;
  return doc;
}

MipModel build_pricing(const InstanceSet& instances, const ClassifierModel& model,
                       std::size_t tmax, const std::vector<double>& duals) {
  const FeatureSchema& schema = *instances.schema;
  const std::size_t width = schema.expanded_size();
  if (duals.size() != instances.size()) {
    throw Error(Errc::dimension_mismatch, "one dual value per instance expected");
  }
  MipModel mip;
  mip.set_objective_sense(ObjSense::maximize);

  std::vector<VarId> v(width), d(width), f(schema.original_size());
  for (std::size_t h = 0; h < width; ++h) {
    v[h] = mip.add_binary("v" + std::to_string(h));
    mip.set_priority(v[h], 2);
    mip.add_to_group("v", v[h]);
  }
  embed(model, mip, v, "clf");
  for (std::size_t h = 0; h < width; ++h) {
    d[h] = mip.add_binary("d" + std::to_string(h));
    mip.add_to_group("d", d[h]);
  }
  for (std::size_t l = 0; l < f.size(); ++l) {
    f[l] = mip.add_binary("f" + std::to_string(l));
    mip.add_to_group("f", f[l]);
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const VarId z = mip.add_binary("z" + std::to_string(i), duals[i]);
    mip.add_to_group("z", z);
    mip.set_priority(z, 1);
    if (!(duals[i] > 0.0)) {
      mip.set_bounds(z, 0.0, 0.0);
      continue;
    }
    // d_h >= xi_ih + z_i - 1 with xi_ih = |x_ih - v_h| affine in v_h. In a
    // one-hot group only the instance's hot bit needs the row: any change of
    // the group clears it.
    const BitVector& x0 = instances[i].values;
    for (std::size_t h = 0; h < width; ++h) {
      if (!x0[h] && schema.group(schema.owner(h)).size > 1) continue;
      const std::string tag = std::to_string(i) + "_" + std::to_string(h);
      if (x0[h]) {
        mip.add_constraint(LinearExpr{}.add(d[h], 1.0).add(v[h], 1.0).add(z, -1.0), Sense::ge,
                           0.0, "diff" + tag);
      } else {
        mip.add_constraint(LinearExpr{}.add(d[h], 1.0).add(v[h], -1.0).add(z, -1.0), Sense::ge,
                           -1.0, "diff" + tag);
      }
    }
  }
  for (std::size_t l = 0; l < f.size(); ++l) {
    const FeatureGroup& g = schema.group(l);
    LinearExpr e;
    e.add(f[l], static_cast<double>(g.size));
    for (std::size_t h = g.begin; h < g.end(); ++h) e.add(d[h], -1.0);
    mip.add_constraint(e, Sense::ge, 0.0, "group" + std::to_string(l));
    for (std::size_t h = g.begin; h < g.end(); ++h) {
      mip.add_constraint(LinearExpr{}.add(f[l], 1.0).add(d[h], -1.0), Sense::ge, 0.0,
                         "fd" + std::to_string(h));
    }
  }
  LinearExpr budget;
  for (VarId fl : f) budget.add(fl, 1.0);
  mip.add_constraint(budget, Sense::le, static_cast<double>(tmax), "budget");
  for (std::size_t l : schema.onehot_set()) {
    const FeatureGroup& g = schema.group(l);
    LinearExpr e;
    for (std::size_t h = g.begin; h < g.end(); ++h) e.add(v[h], 1.0);
    mip.add_constraint(e, Sense::eq, 1.0, "onehot" + std::to_string(l));
  }
  return mip;
}

ColgenState initialize(const InstanceSet& instances, const ClassifierModel& model,
                       std::size_t tmax, double time_limit) {
  check_inputs(instances, model, tmax);
  const auto start = Clock::now();
  const std::size_t n = instances.size();
  ColgenState state;
  std::vector<std::size_t> offending;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<std::size_t> twin;
    for (std::size_t j = 0; j < i && !twin; ++j) {
      if (instances[j].values == instances[i].values) twin = j;
    }
    if (twin) {
      if (std::find(offending.begin(), offending.end(), *twin) != offending.end()) {
        offending.push_back(i);
      }
      continue;
    }

    std::vector<double> w(n, 0.0);
    w[i] = 1.0;
    MipModel mip = build_pricing(instances, model, tmax, w);
    mip.set_bounds(mip.group("z")[i], 1.0, 1.0);
    mip.clear_objective();
    mip.set_objective_sense(ObjSense::minimize);
    for (VarId fl : mip.group("f")) mip.set_objective(fl, 1.0);

    const MipSolution sol =
        solve_mip(mip, limits_for(std::max(0.0, time_limit - seconds_since(start))));
    if (sol.status == MipStatus::infeasible) {
      offending.push_back(i);
      continue;
    }
    if (!sol.has_incumbent()) {
      throw Error(Errc::infeasible, "time limit reached while building the initial columns");
    }
    auto column = read_solution(mip, sol.values, instances, model, w);
    if (!column || column->column.coverage[i] != 1) {
      throw Error(Errc::numerical_breakdown, "initial column for instance " + std::to_string(i) +
                                                 " fails recomputation");
    }
    if (!contains(state.active, column->column)) state.active.push_back(std::move(column->column));
  }
  if (!offending.empty()) {
    throw Error(Errc::infeasible,
                std::to_string(offending.size()) + " instance(s) have no counterfactual within " +
                    std::to_string(tmax) + " changed features",
                offending);
  }
  return state;
}

MipModel build_rmp(const ColgenState& state, std::size_t instances, bool integer) {
  MipModel mip;
  mip.set_objective_sense(ObjSense::minimize);
  std::vector<LinearExpr> rows(instances);
  for (std::size_t k = 0; k < state.active.size(); ++k) {
    const VarId y = integer ? mip.add_binary("y" + std::to_string(k), 1.0)
                            : mip.add_continuous("y" + std::to_string(k), 0.0, kInf, 1.0);
    mip.add_to_group("y", y);
    const auto& cov = state.active[k].coverage;
    for (std::size_t i = 0; i < instances; ++i) {
      if (cov.at(i)) rows[i].add(y, 1.0);
    }
  }
  for (std::size_t i = 0; i < instances; ++i) {
    mip.add_constraint(rows[i], Sense::ge, 1.0, "cover" + std::to_string(i));
  }
  return mip;
}

std::vector<PricedColumn> extract_columns(const MipModel& pricing, const MipSolution& solution,
                                          const InstanceSet& instances,
                                          const ClassifierModel& model,
                                          const std::vector<double>& duals,
                                          const std::vector<Column>& known, double threshold) {
  std::vector<PricedColumn> out;
  if (!solution.has_incumbent()) return out;
  std::vector<const std::vector<double>*> candidates{&solution.values};
  for (const auto& entry : solution.pool) {
    if (entry.objective > threshold) candidates.push_back(&entry.values);
  }
  for (const auto* values : candidates) {
    auto c = read_solution(pricing, *values, instances, model, duals);
    if (c && c->value > threshold) add_unique(out, std::move(*c), known);
  }
  return out;
}

std::vector<PricedColumn> refine(const PricedColumn& column, const std::vector<double>& duals,
                                 const InstanceSet& instances, const ClassifierModel& model,
                                 std::size_t tmax, const std::vector<Column>& known,
                                 double time_limit) {
  const auto start = Clock::now();
  std::vector<PricedColumn> out;
  auto remaining = [&] { return std::max(0.0, time_limit - seconds_since(start)); };

  // (a) counterfactual fixed
  {
    MipModel mip = build_pricing(instances, model, tmax, duals);
    const auto& vg = mip.group("v");
    for (std::size_t h = 0; h < vg.size(); ++h) {
      mip.set_bounds(vg[h], column.column.values[h], column.column.values[h]);
    }
    MipLimits limits = limits_for(remaining());
    limits.pool_size = 1;
    const MipSolution sol = solve_mip(mip, limits);
    if (sol.has_incumbent()) {
      if (auto c = read_solution(mip, sol.values, instances, model, duals)) {
        add_unique(out, std::move(*c), known);
      }
    }
  }
  // (b) assignment fixed, fewest changed features
  if (!column.selected.empty()) {
    std::vector<double> w(instances.size(), 0.0);
    for (std::size_t i : column.selected) w[i] = 1.0;
    MipModel mip = build_pricing(instances, model, tmax, w);
    const auto& zg = mip.group("z");
    for (std::size_t i : column.selected) mip.set_bounds(zg[i], 1.0, 1.0);
    mip.clear_objective();
    mip.set_objective_sense(ObjSense::minimize);
    for (VarId fl : mip.group("f")) mip.set_objective(fl, 1.0);
    MipLimits limits = limits_for(remaining());
    limits.pool_size = 1;
    const MipSolution sol = solve_mip(mip, limits);
    if (sol.has_incumbent()) {
      if (auto c = read_solution(mip, sol.values, instances, model, duals)) {
        add_unique(out, std::move(*c), known);
      }
    }
  }
  return out;
}

ColgenResult run_colgen(const InstanceSet& instances, const ClassifierModel& model,
                        const ColgenOptions& options) {
  const auto start = Clock::now();
  auto remaining = [&] { return std::max(0.0, options.time_limit - seconds_since(start)); };
  const std::size_t n = instances.size();
  const double threshold = 1.0 + options.tol_price;

  ColgenResult result;
  ColgenState state = initialize(instances, model, options.tmax, options.time_limit);
  result.timings.init = seconds_since(start);

  LpSolution lp;
  bool lp_integral = false;
  while (true) {
    if (state.iteration >= options.max_iterations || remaining() <= 0.0) break;
    ++state.iteration;
    TraceRecord rec;
    rec.iteration = state.iteration;

    auto t0 = Clock::now();
    const MipModel rmp = build_rmp(state, n);
    lp = solve_lp(rmp);
    result.timings.master += seconds_since(t0);
    if (lp.status != LpStatus::optimal) {
      throw Error(Errc::numerical_breakdown, "restricted master LP is not optimal");
    }
    state.lp_value = lp.objective;
    state.duals = lp.duals;
    lp_integral = std::all_of(lp.values.begin(), lp.values.end(), [](double y) {
      return std::abs(y - std::round(y)) <= 1e-6;
    });
    rec.lp_value = lp.objective;
    rec.dual_value = dual_objective(rmp, lp);

    // Stored columns that price out under the new duals go in first.
    std::vector<Column> keep;
    for (auto& c : state.pool) {
      if (priced_value(c, state.duals) > threshold) {
        state.active.push_back(std::move(c));
        ++rec.pool_activated;
      } else {
        keep.push_back(std::move(c));
      }
    }
    state.pool = std::move(keep);

    if (rec.pool_activated == 0) {
      t0 = Clock::now();
      const MipModel pricing = build_pricing(instances, model, options.tmax, state.duals);
      MipLimits limits = limits_for(remaining());
      limits.cutoff = threshold;
      limits.pool_size = options.pricing_pool;
      if (options.pricing_stop > 0) limits.solution_limit = options.pricing_stop;
      const MipSolution sol = solve_mip(pricing, limits);
      result.timings.pricing += seconds_since(t0);

      if (sol.status == MipStatus::infeasible) {
        result.converged = true;
        rec.active_columns = state.active.size();
        rec.elapsed = seconds_since(start);
        if (options.trace) *options.trace << trace_to_json(rec).dump() << '\n';
        result.trace.push_back(rec);
        break;
      }
      if (!sol.has_incumbent()) break;
      rec.pricing_value = sol.objective;

      auto found = extract_columns(pricing, sol, instances, model, state.duals, state.active,
                                   threshold);
      if (options.refine) {
        t0 = Clock::now();
        const std::size_t priced = found.size();
        for (std::size_t c = 0; c < priced; ++c) {
          for (auto& r : refine(found[c], state.duals, instances, model, options.tmax,
                                state.active, remaining())) {
            add_unique(found, std::move(r), state.active);
          }
        }
        result.timings.refine += seconds_since(t0);
      }
      for (auto& c : found) {
        if (c.value > threshold) {
          state.active.push_back(std::move(c.column));
          ++rec.columns_added;
        } else if (!contains(state.pool, c.column)) {
          state.pool.push_back(std::move(c.column));
        }
      }
      if (rec.columns_added == 0) break;
    }
    rec.active_columns = state.active.size();
    rec.elapsed = seconds_since(start);
    if (options.trace) *options.trace << trace_to_json(rec).dump() << '\n';
    result.trace.push_back(rec);
  }
  result.iterations = state.iteration;
  result.lp_value = state.lp_value;
  result.duals = state.duals;
  if (std::isfinite(state.lp_value)) {
    result.lp_lower_bound =
        static_cast<std::size_t>(std::max(0.0, std::ceil(state.lp_value - 1e-6)));
  }

  // Final integer master over the generated columns.
  auto t0 = Clock::now();
  const MipModel ip = build_rmp(state, n, true);
  MipLimits limits = limits_for(remaining());
  limits.pool_size = 1;
  const MipSolution sol = solve_mip(ip, limits);
  result.timings.final_ip = seconds_since(t0);

  std::vector<Column> chosen;
  if (sol.has_incumbent()) {
    const auto& yg = ip.group("y");
    for (std::size_t k = 0; k < yg.size(); ++k) {
      if (sol.values[yg[k].index] > 0.5) chosen.push_back(state.active[k]);
    }
  } else {
    chosen = state.active;  // always a cover: the initial columns explain everyone
  }
  const auto cover = first_cover(instances, chosen);
  std::vector<long> remap(chosen.size(), -1);
  GroupExplanation& g = result.explanation;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cover[i]) throw Error(Errc::numerical_breakdown, "final master left an instance uncovered");
    const std::size_t k = *cover[i];
    if (remap[k] < 0) {
      remap[k] = static_cast<long>(g.columns.size());
      g.columns.push_back(chosen[k]);
    }
    g.assignment.push_back(static_cast<std::size_t>(remap[k]));
  }
  g.objective = g.columns.size();
  result.certified = result.converged && sol.status == MipStatus::optimal &&
                     (lp_integral || g.objective == result.lp_lower_bound);
  g.status = result.certified ? SolveStatus::optimal : SolveStatus::feasible;
  g.bound = result.converged ? static_cast<double>(result.lp_lower_bound) : 1.0;
  g.limit_reason = remaining() <= 0.0 ? "time" : "";
  g.nodes = sol.nodes;
  result.columns = std::move(state.active);

  const ValidationReport report = validate_explanation(instances, model, g, options.tmax);
  if (!report.ok()) {
    throw Error(Errc::numerical_breakdown,
                "colgen solution fails validation: " + report.violations.front().detail);
  }
  g.seconds = seconds_since(start);
  return result;
}

}  // namespace groupcf
