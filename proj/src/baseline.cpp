#include "groupcf/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "groupcf/error.hpp"
#include "groupcf/validate.hpp"

namespace groupcf {

namespace {

std::string idx(std::size_t k) { return std::to_string(k); }

void check_inputs(const InstanceSet& instances, const ClassifierModel& model,
                  const BaselineConfig& cfg) {
  validate_instance_set(instances);
  const FeatureSchema& schema = *instances.schema;
  if (model.input_width() != schema.expanded_size()) {
    throw Error(Errc::dimension_mismatch,
                "model expects " + std::to_string(model.input_width()) + " inputs, schema has " +
                    std::to_string(schema.expanded_size()) + " expanded columns");
  }
  if (cfg.tmax < 1 || cfg.tmax > schema.original_size()) {
    throw Error(Errc::invalid_config, "tmax must lie in [1, " +
                                          std::to_string(schema.original_size()) + "]");
  }
  if (cfg.K && (*cfg.K < 1 || *cfg.K > instances.size())) {
    throw Error(Errc::invalid_config, "K must lie in [1, |S|]");
  }
  require_negative(instances, model);
  if (model.logit_bounds().upper < model.threshold_logit()) {
    throw Error(Errc::infeasible_encoding, "no input can reach the classification threshold");
  }
}

}  // namespace

MipModel build_baseline(const InstanceSet& instances, const ClassifierModel& model,
                        const BaselineConfig& cfg) {
  check_inputs(instances, model, cfg);
  const FeatureSchema& schema = *instances.schema;
  const std::size_t n = instances.size();
  const std::size_t K = cfg.K.value_or(n);
  const std::size_t width = schema.expanded_size();

  MipModel mip;
  mip.set_objective_sense(ObjSense::minimize);
  std::vector<VarId> y(K);
  std::vector<std::vector<VarId>> a(K, std::vector<VarId>(n));

  for (std::size_t k = 0; k < K; ++k) {
    const std::string sk = idx(k);
    y[k] = mip.add_binary("y" + sk, 1.0);
    mip.set_priority(y[k], 3);
    mip.add_to_group("y", y[k]);

    std::vector<VarId> v(width), d(width);
    for (std::size_t h = 0; h < width; ++h) {
      v[h] = mip.add_binary("v" + sk + "_" + idx(h));
      mip.set_priority(v[h], 1);
      mip.add_to_group("v" + sk, v[h]);
    }
    embed(model, mip, v, "clf" + sk);

    for (std::size_t h = 0; h < width; ++h) {
      d[h] = mip.add_binary("d" + sk + "_" + idx(h));
      mip.add_to_group("d" + sk, d[h]);
    }
    std::vector<VarId> f(schema.original_size());
    for (std::size_t l = 0; l < f.size(); ++l) {
      f[l] = mip.add_binary("f" + sk + "_" + idx(l));
      mip.add_to_group("f" + sk, f[l]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      a[k][i] = mip.add_binary("a" + sk + "_" + idx(i));
      mip.set_priority(a[k][i], 2);
      mip.add_to_group("a" + sk, a[k][i]);
      if (cfg.symmetry_breaking && k > i) mip.set_bounds(a[k][i], 0.0, 0.0);
    }

    // |T_l| f_l >= sum_{h in T_l} d_h
    for (std::size_t l = 0; l < f.size(); ++l) {
      const FeatureGroup& g = schema.group(l);
      LinearExpr e;
      e.add(f[l], static_cast<double>(g.size));
      for (std::size_t h = g.begin; h < g.end(); ++h) e.add(d[h], -1.0);
      mip.add_constraint(e, Sense::ge, 0.0, "group" + sk + "_" + idx(l));
      if (!cfg.tighten) continue;
      for (std::size_t h = g.begin; h < g.end(); ++h) {
        mip.add_constraint(LinearExpr{}.add(f[l], 1.0).add(d[h], -1.0), Sense::ge, 0.0,
                           "fd" + sk + "_" + idx(h));
      }
    }
    // sum_l f_l <= tmax y
    LinearExpr budget;
    for (VarId fl : f) budget.add(fl, 1.0);
    budget.add(y[k], -static_cast<double>(cfg.tmax));
    mip.add_constraint(budget, Sense::le, 0.0, "budget" + sk);
    // one-hot groups
    for (std::size_t l : schema.onehot_set()) {
      const FeatureGroup& g = schema.group(l);
      LinearExpr e;
      for (std::size_t h = g.begin; h < g.end(); ++h) e.add(v[h], 1.0);
      mip.add_constraint(e, Sense::eq, 1.0, "onehot" + sk + "_" + idx(l));
    }

    for (std::size_t i = 0; i < n; ++i) {
      // a_i <= y
      mip.add_constraint(LinearExpr{}.add(a[k][i], 1.0).add(y[k], -1.0), Sense::le, 0.0,
                         "use" + sk + "_" + idx(i));
      // Slots closed to instance i need no difference indicators: a = 0
      // makes every row below vacuous.
      if (cfg.symmetry_breaking && k > i) continue;
      const BitVector& x0 = instances[i].values;
      std::vector<VarId> xis(width);
      for (std::size_t h = 0; h < width; ++h) {
        const std::string tag = sk + "_" + idx(i) + "_" + idx(h);
        const VarId xi = mip.add_binary("xi" + tag);
        const VarId gamma = mip.add_binary("gamma" + tag);
        xis[h] = xi;
        mip.add_to_group("xi" + sk, xi);
        mip.add_to_group("gamma" + sk, gamma);
        // |x0 - v| <= xi; the other half of the absolute value holds by the
        // bound xi >= 0 because x0 is a constant bit.
        if (x0[h]) {
          mip.add_constraint(LinearExpr{}.add(v[h], -1.0).add(xi, -1.0), Sense::le, -1.0,
                             "absl" + tag);
        } else {
          mip.add_constraint(LinearExpr{}.add(v[h], 1.0).add(xi, -1.0), Sense::le, 0.0,
                             "absr" + tag);
        }
        // d >= gamma, gamma <= xi, gamma <= a, gamma >= xi + a - 1
        mip.add_constraint(LinearExpr{}.add(d[h], 1.0).add(gamma, -1.0), Sense::ge, 0.0,
                           "dg" + tag);
        mip.add_constraint(LinearExpr{}.add(gamma, 1.0).add(xi, -1.0), Sense::le, 0.0,
                           "gx" + tag);
        mip.add_constraint(LinearExpr{}.add(gamma, 1.0).add(a[k][i], -1.0), Sense::le, 0.0,
                           "ga" + tag);
        mip.add_constraint(LinearExpr{}.add(gamma, 1.0).add(xi, -1.0).add(a[k][i], -1.0),
                           Sense::ge, -1.0, "gxa" + tag);
      }
      // A group changes for instance i exactly when its hot bit does, and an
      // assigned instance changes at most tmax groups.
      const std::size_t L = schema.original_size();
      if (cfg.tighten && L > cfg.tmax) {
        LinearExpr e;
        for (std::size_t l = 0; l < L; ++l) {
          const FeatureGroup& g = schema.group(l);
          std::size_t hot = g.begin;
          while (g.size > 1 && !x0[hot]) ++hot;
          e.add(xis[hot], 1.0);
        }
        e.add(a[k][i], static_cast<double>(L - cfg.tmax));
        mip.add_constraint(e, Sense::le, static_cast<double>(L), "changes" + sk + "_" + idx(i));
      }
    }
  }

  // every instance explained at least once
  for (std::size_t i = 0; i < n; ++i) {
    LinearExpr e;
    for (std::size_t k = 0; k < K; ++k) e.add(a[k][i], 1.0);
    mip.add_constraint(e, Sense::ge, 1.0, "cover" + idx(i));
  }
  if (cfg.symmetry_breaking) {
    for (std::size_t k = 0; k + 1 < K; ++k) {
      mip.add_constraint(LinearExpr{}.add(y[k], 1.0).add(y[k + 1], -1.0), Sense::ge, 0.0,
                         "order" + idx(k));
    }
  }
  if (cfg.symmetry_breaking && cfg.tighten) {
    // Number the used slots by their smallest member: instance i may join
    // slot k only if a smaller instance sits in slot k - 1, and an open slot
    // has a member.
    for (std::size_t k = 0; k < K; ++k) {
      LinearExpr open;
      open.add(y[k], 1.0);
      for (std::size_t i = k; i < n; ++i) open.add(a[k][i], -1.0);
      mip.add_constraint(open, Sense::le, 0.0, "member" + idx(k));
      if (k == 0) continue;
      for (std::size_t i = k; i < n; ++i) {
        LinearExpr e;
        e.add(a[k][i], 1.0);
        for (std::size_t j = k - 1; j < i; ++j) e.add(a[k - 1][j], -1.0);
        mip.add_constraint(e, Sense::le, 0.0, "first" + idx(k) + "_" + idx(i));
      }
    }
  }
  return mip;
}

GroupExplanation solve_baseline(const InstanceSet& instances, const ClassifierModel& model,
                                const BaselineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const MipModel mip = build_baseline(instances, model, cfg);
  const FeatureSchema& schema = *instances.schema;
  const std::size_t n = instances.size();
  const std::size_t K = cfg.K.value_or(n);

  MipLimits limits;
  limits.time_limit = cfg.time_limit;
  limits.pool_size = 1;
  limits.max_dense_entries = cfg.max_dense_entries;
  const MipSolution sol = solve_mip(mip, limits);

  GroupExplanation out;
  out.nodes = sol.nodes;
  out.limit_reason = sol.limit_reason;
  out.bound = sol.bound;
  auto finish = [&]() {
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };

  if (sol.status == MipStatus::infeasible) {
    std::vector<std::size_t> offending;
    for (std::size_t i = 0; i < n; ++i) {
      InstanceSet single{instances.schema, {instances[i]}, {}};
      BaselineConfig one = cfg;
      one.K = 1;
      if (solve_mip(build_baseline(single, model, one)).status == MipStatus::infeasible) {
        offending.push_back(i);
      }
    }
    throw Error(Errc::infeasible,
                std::to_string(offending.size()) + " instance(s) have no counterfactual within " +
                    std::to_string(cfg.tmax) + " changed features",
                offending);
  }
  if (!sol.has_incumbent()) {
    out.status = SolveStatus::no_incumbent;
    return finish();
  }

  auto on = [&](VarId var) { return sol.values[var.index] > 0.5; };
  const auto& ygroup = mip.group("y");
  std::vector<std::optional<std::size_t>> slot_of(n);
  for (std::size_t k = 0; k < K; ++k) {
    if (!on(ygroup[k])) continue;
    const auto& vg = mip.group("v" + idx(k));
    const auto& ag = mip.group("a" + idx(k));
    const auto& fg = mip.group("f" + idx(k));
    BitVector v(vg.size());
    for (std::size_t h = 0; h < vg.size(); ++h) v[h] = on(vg[h]) ? 1 : 0;

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (on(ag[i]) && !slot_of[i]) members.push_back(i);
    }
    if (members.empty()) continue;
    // Declared features, trimmed to those some member actually changes.
    std::vector<std::size_t> features;
    for (std::size_t l = 0; l < fg.size(); ++l) {
      if (!on(fg[l])) continue;
      const bool used = std::any_of(members.begin(), members.end(), [&](std::size_t i) {
        const auto changed = changed_features(schema, instances[i].values, v);
        return std::binary_search(changed.begin(), changed.end(), l);
      });
      if (used) features.push_back(l);
    }
    for (std::size_t i : members) slot_of[i] = out.columns.size();
    out.columns.push_back(make_column(instances, std::move(v), std::move(features)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!slot_of[i]) throw Error(Errc::numerical_breakdown, "baseline left an instance unassigned");
    out.assignment.push_back(*slot_of[i]);
  }
  out.objective = out.columns.size();
  out.status = sol.status == MipStatus::optimal ? SolveStatus::optimal : SolveStatus::feasible;
  if (out.status == SolveStatus::optimal) out.bound = static_cast<double>(out.objective);

  const ValidationReport report = validate_explanation(instances, model, out, cfg.tmax);
  if (!report.ok()) {
    throw Error(Errc::numerical_breakdown,
                "baseline solution fails validation: " + report.violations.front().detail);
  }
  return finish();
}

}  // namespace groupcf
