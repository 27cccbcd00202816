#include "groupcf/column.hpp"

#include <algorithm>

#include "groupcf/error.hpp"

namespace groupcf {

std::size_t Column::covered_count() const {
  return static_cast<std::size_t>(std::count(coverage.begin(), coverage.end(), 1));
}

std::vector<std::size_t> changed_features(const FeatureSchema& schema,
                                          std::span<const std::uint8_t> instance,
                                          std::span<const std::uint8_t> values) {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < schema.original_size(); ++l) {
    const FeatureGroup& g = schema.group(l);
    for (std::size_t h = g.begin; h < g.end(); ++h) {
      if (instance[h] != values[h]) {
        out.push_back(l);
        break;
      }
    }
  }
  return out;
}

bool covers(const FeatureSchema& schema, std::span<const std::uint8_t> instance,
            std::span<const std::uint8_t> values, std::span<const std::size_t> features) {
  for (std::size_t h = 0; h < values.size(); ++h) {
    if (instance[h] != values[h] &&
        !std::binary_search(features.begin(), features.end(), schema.owner(h))) {
      return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> compute_coverage(const InstanceSet& instances,
                                           std::span<const std::uint8_t> values,
                                           std::span<const std::size_t> features) {
  std::vector<std::uint8_t> out(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    out[i] = covers(*instances.schema, instances[i].values, values, features) ? 1 : 0;
  }
  return out;
}

Column make_column(const InstanceSet& instances, BitVector values,
                   std::vector<std::size_t> features) {
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  Column c;
  c.coverage = compute_coverage(instances, values, features);
  c.values = std::move(values);
  c.features = std::move(features);
  return c;
}

bool same_column(const Column& a, const Column& b) {
  return a.values == b.values && a.features == b.features;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::no_incumbent: return "no_incumbent";
  }
  return "optimal";
}

std::vector<std::optional<std::size_t>> first_cover(const InstanceSet& instances,
                                                    std::span<const Column> columns) {
  std::vector<std::optional<std::size_t>> out(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k].coverage.at(i)) {
        out[i] = k;
        break;
      }
    }
  }
  return out;
}

nlohmann::json column_to_json(const Column& column) {
  return {{"v", column.values}, {"F", column.features}, {"coverage", column.coverage}};
}

Column column_from_json(const nlohmann::json& doc) {
  try {
    Column c;
    c.values = doc.at("v").get<BitVector>();
    c.features = doc.at("F").get<std::vector<std::size_t>>();
    c.coverage = doc.value("coverage", std::vector<std::uint8_t>{});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed column: ") + e.what());
  }
}

}  // namespace groupcf
