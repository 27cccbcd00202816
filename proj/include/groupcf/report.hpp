#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcf/classifier.hpp"
#include "groupcf/column.hpp"
#include "groupcf/schema.hpp"

namespace groupcf {

// Rows are explanations, columns are expanded features.
struct Heatmap {
  std::vector<std::string> labels;         // expanded column labels
  std::vector<std::string> groups;         // owning original feature per column
  std::vector<BitVector> rows;             // v of each explanation
  std::vector<std::vector<bool>> changed;  // column owner is in F
  std::vector<std::size_t> covered;        // instances assigned to each row
};

Heatmap make_heatmap(const GroupExplanation& result, const FeatureSchema& schema);
std::string heatmap_csv(const Heatmap& heatmap);
std::string heatmap_svg(const Heatmap& heatmap);

struct FeatureFrequency {
  std::string feature;
  std::size_t explanations = 0;  // columns with the feature in F
  std::size_t instances = 0;     // same, weighted by covered instances
};

std::vector<FeatureFrequency> feature_frequencies(const GroupExplanation& result,
                                                  const FeatureSchema& schema);
std::string frequency_csv(const std::vector<FeatureFrequency>& freq);
std::string frequency_svg(const std::vector<FeatureFrequency>& freq);

// Self-contained result document: schema, model, instances, tmax and the
// explanation, so that it can be validated without other files.
struct ResultDocument {
  std::shared_ptr<const FeatureSchema> schema;
  std::shared_ptr<const ClassifierModel> model;
  InstanceSet instances;
  std::size_t tmax = 1;
  std::string method;
  GroupExplanation explanation;
};

nlohmann::json explanation_to_json(const GroupExplanation& result, const FeatureSchema& schema);
GroupExplanation explanation_from_json(const nlohmann::json& doc);
nlohmann::json result_to_json(const ResultDocument& doc);
ResultDocument result_from_json(const nlohmann::json& doc);

// Writes through a temporary file in the same directory and renames it.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace groupcf
