#include "groupcf/validate.hpp"

#include <algorithm>
#include <set>

#include "groupcf/error.hpp"

namespace groupcf {

namespace {

// Set of original features on which x and v differ.
std::set<std::size_t> diff(const FeatureSchema& schema, const BitVector& x, const BitVector& v) {
  std::set<std::size_t> out;
  for (std::size_t l = 0; l < schema.original_size(); ++l) {
    const FeatureGroup& g = schema.group(l);
    if (!std::equal(x.begin() + g.begin, x.begin() + g.end(), v.begin() + g.begin)) out.insert(l);
  }
  return out;
}

}  // namespace

ValidationReport validate_explanation(const InstanceSet& instances, const ClassifierModel& model,
                                      const GroupExplanation& explanation, std::size_t tmax) {
  ValidationReport report;
  const FeatureSchema& schema = *instances.schema;
  const std::size_t n = instances.size();
  auto flag = [&](std::string kind, std::optional<std::size_t> k, std::optional<std::size_t> i,
                  std::string detail) {
    report.violations.push_back({std::move(kind), k, i, std::move(detail)});
  };

  std::vector<bool> shape_ok(explanation.columns.size(), false);
  for (std::size_t k = 0; k < explanation.columns.size(); ++k) {
    const Column& c = explanation.columns[k];
    ++report.columns_checked;
    if (c.values.size() != schema.expanded_size()) {
      flag("consistency", k, std::nullopt, "counterfactual has the wrong length");
      continue;
    }
    shape_ok[k] = true;
    if (!schema.is_valid(c.values)) {
      flag("onehot", k, std::nullopt, "counterfactual breaks a one-hot group");
    }
    if (model.logit(std::span<const std::uint8_t>(c.values)) < model.threshold_logit()) {
      flag("positivity", k, std::nullopt,
           "predict_proba " + std::to_string(model.predict_proba(c.values)) + " below tau");
    }
    const std::set<std::size_t> declared(c.features.begin(), c.features.end());
    if (declared.size() > tmax) {
      flag("sparsity", k, std::nullopt,
           std::to_string(declared.size()) + " changed features exceed tmax");
    }
    if (c.coverage.size() != n) {
      flag("consistency", k, std::nullopt, "coverage vector has the wrong length");
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = diff(schema, instances[i].values, c.values);
      const bool explained =
          std::includes(declared.begin(), declared.end(), d.begin(), d.end());
      if (explained != (c.coverage[i] == 1)) {
        flag("consistency", k, i, "stored coverage disagrees with recomputation");
      }
    }
  }

  if (explanation.assignment.size() != n) {
    flag("assignment", std::nullopt, std::nullopt, "assignment does not list every instance");
    return report;
  }
  std::set<std::size_t> used;
  for (std::size_t i = 0; i < n; ++i) {
    ++report.instances_checked;
    const std::size_t k = explanation.assignment[i];
    if (k >= explanation.columns.size() || !shape_ok[k]) {
      flag("coverage", std::nullopt, i, "instance is not assigned to a valid column");
      continue;
    }
    used.insert(k);
    const Column& c = explanation.columns[k];
    const std::set<std::size_t> declared(c.features.begin(), c.features.end());
    const auto d = diff(schema, instances[i].values, c.values);
    if (!std::includes(declared.begin(), declared.end(), d.begin(), d.end())) {
      flag("coverage", k, i, "instance differs outside the column's feature set");
    }
  }
  if (explanation.objective != explanation.columns.size() || used.size() != explanation.columns.size()) {
    flag("assignment", std::nullopt, std::nullopt,
         "objective does not match the number of used columns");
  }
  return report;
}

void require_negative(const InstanceSet& instances, const ClassifierModel& model) {
  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (model.is_positive(instances[i].values)) positive.push_back(i);
  }
  if (!positive.empty()) {
    throw Error(Errc::not_negative,
                std::to_string(positive.size()) + " instance(s) already classified positive",
                positive);
  }
}

}  // namespace groupcf
