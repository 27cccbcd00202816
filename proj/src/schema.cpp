#include "groupcf/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "groupcf/csv.hpp"
#include "groupcf/error.hpp"

namespace groupcf {

namespace {

std::string format_edge(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

double parse_number(const std::string& text, const std::string& feature) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(Errc::row_encoding,
                "feature '" + feature + "': '" + text + "' is not a finite number");
  }
  return value;
}

FeatureKind parse_kind(const std::string& kind) {
  if (kind == "binary") return FeatureKind::binary;
  if (kind == "categorical") return FeatureKind::categorical;
  if (kind == "numeric") return FeatureKind::numeric;
  throw Error(Errc::invalid_config, "unknown feature kind '" + kind + "'");
}

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::binary: return "binary";
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::numeric: return "numeric";
  }
  return "binary";
}

FeatureSchema build_schema(std::vector<OriginalFeature> features) {
  FeatureSchema schema;
  std::set<std::string> names;
  for (auto& feature : features) {
    if (!names.insert(feature.name).second) {
      throw Error(Errc::duplicate_feature_name, "feature '" + feature.name + "' declared twice");
    }
    std::size_t width = 1;
    switch (feature.kind) {
      case FeatureKind::binary:
        feature.levels.clear();
        feature.edges.clear();
        break;
      case FeatureKind::categorical: {
        if (feature.levels.size() < 2) {
          throw Error(Errc::empty_bins,
                      "categorical feature '" + feature.name + "' needs at least 2 levels");
        }
        std::set<std::string> unique(feature.levels.begin(), feature.levels.end());
        if (unique.size() != feature.levels.size()) {
          throw Error(Errc::duplicate_feature_name,
                      "categorical feature '" + feature.name + "' repeats a level");
        }
        width = feature.levels.size();
        break;
      }
      case FeatureKind::numeric:
        if (feature.edges.empty()) {
          throw Error(Errc::empty_bins,
                      "numeric feature '" + feature.name + "' needs at least 2 bins");
        }
        for (std::size_t e = 0; e < feature.edges.size(); ++e) {
          if (!std::isfinite(feature.edges[e]) ||
              (e > 0 && !(feature.edges[e - 1] < feature.edges[e]))) {
            throw Error(Errc::non_monotone_bin_edges,
                        "bin edges of '" + feature.name + "' must be finite and strictly increasing");
          }
        }
        width = feature.edges.size() + 1;
        break;
    }
    const std::size_t l = schema.groups_.size();
    schema.groups_.push_back({schema.owner_.size(), width});
    schema.owner_.insert(schema.owner_.end(), width, l);
    if (width >= 2) schema.onehot_.push_back(l);
  }
  schema.features_ = std::move(features);
  return schema;
}

std::optional<std::size_t> FeatureSchema::find(const std::string& name) const {
  for (std::size_t l = 0; l < features_.size(); ++l) {
    if (features_[l].name == name) return l;
  }
  return std::nullopt;
}

std::string FeatureSchema::bin_label(std::size_t feature, std::size_t bin) const {
  const auto& edges = features_.at(feature).edges;
  const std::string lo = bin == 0 ? "-inf" : format_edge(edges[bin - 1]);
  const std::string hi = bin == edges.size() ? "inf" : format_edge(edges[bin]);
  return "(" + lo + "," + hi + (bin == edges.size() ? ")" : "]");
}

std::string FeatureSchema::column_label(std::size_t expanded) const {
  const std::size_t l = owner(expanded);
  const auto& feature = features_[l];
  const std::size_t offset = expanded - groups_[l].begin;
  switch (feature.kind) {
    case FeatureKind::binary: return feature.name;
    case FeatureKind::categorical: return feature.name + "=" + feature.levels[offset];
    case FeatureKind::numeric: return feature.name + "=" + bin_label(l, offset);
  }
  return feature.name;
}

bool FeatureSchema::is_valid(std::span<const std::uint8_t> values) const {
  if (values.size() != expanded_size()) return false;
  for (auto bit : values) {
    if (bit > 1) return false;
  }
  for (std::size_t l : onehot_) {
    const auto& g = groups_[l];
    std::size_t ones = 0;
    for (std::size_t h = g.begin; h < g.end(); ++h) ones += values[h];
    if (ones != 1) return false;
  }
  return true;
}

FeatureSchema schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(Errc::invalid_config, "schema must be an object with a 'features' array");
  }
  std::vector<OriginalFeature> features;
  try {
    for (const auto& entry : doc["features"]) {
      OriginalFeature feature;
      feature.name = entry.at("name").get<std::string>();
      feature.kind = parse_kind(entry.at("kind").get<std::string>());
      if (feature.kind == FeatureKind::categorical) {
        feature.levels = entry.at("levels").get<std::vector<std::string>>();
      } else if (feature.kind == FeatureKind::numeric) {
        feature.edges = entry.at("edges").get<std::vector<double>>();
      }
      features.push_back(std::move(feature));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed schema: ") + e.what());
  }
  return build_schema(std::move(features));
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& feature : schema.features()) {
    nlohmann::json entry{{"name", feature.name}, {"kind", to_string(feature.kind)}};
    if (feature.kind == FeatureKind::categorical) entry["levels"] = feature.levels;
    if (feature.kind == FeatureKind::numeric) entry["edges"] = feature.edges;
    features.push_back(std::move(entry));
  }
  return {{"features", std::move(features)}};
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, path.string() + ": " + e.what());
  }
  return schema_from_json(doc);
}

std::size_t bin_index(const OriginalFeature& feature, double value) {
  // First edge >= value: value on an edge lands in the bin closed at that edge.
  auto it = std::lower_bound(feature.edges.begin(), feature.edges.end(), value);
  return static_cast<std::size_t>(it - feature.edges.begin());
}

BinaryInstance encode_row(const FeatureSchema& schema, const RawRecord& raw,
                          std::string source_id) {
  BinaryInstance instance;
  instance.source_id = std::move(source_id);
  instance.values.assign(schema.expanded_size(), 0);
  for (std::size_t l = 0; l < schema.original_size(); ++l) {
    const auto& feature = schema.features()[l];
    auto it = raw.find(feature.name);
    if (it == raw.end()) {
      throw Error(Errc::missing_field, "no value for feature '" + feature.name + "'");
    }
    const std::string& text = it->second;
    const auto& g = schema.group(l);
    switch (feature.kind) {
      case FeatureKind::binary: {
        const double value = parse_number(text, feature.name);
        if (value != 0.0 && value != 1.0) {
          throw Error(Errc::row_encoding,
                      "binary feature '" + feature.name + "' must be 0 or 1, got '" + text + "'");
        }
        instance.values[g.begin] = value == 1.0 ? 1 : 0;
        break;
      }
      case FeatureKind::categorical: {
        auto level = std::find(feature.levels.begin(), feature.levels.end(), text);
        if (level == feature.levels.end()) {
          throw Error(Errc::unknown_category_level,
                      "feature '" + feature.name + "' has no level '" + text + "'");
        }
        instance.values[g.begin + static_cast<std::size_t>(level - feature.levels.begin())] = 1;
        break;
      }
      case FeatureKind::numeric:
        instance.values[g.begin + bin_index(feature, parse_number(text, feature.name))] = 1;
        break;
    }
  }
  return instance;
}

RawRecord decode_row(const FeatureSchema& schema, std::span<const std::uint8_t> values) {
  if (!schema.is_valid(values)) {
    throw Error(Errc::invalid_instance, "bit vector is not valid under the schema");
  }
  RawRecord raw;
  for (std::size_t l = 0; l < schema.original_size(); ++l) {
    const auto& feature = schema.features()[l];
    const auto& g = schema.group(l);
    if (feature.kind == FeatureKind::binary) {
      raw[feature.name] = values[g.begin] ? "1" : "0";
      continue;
    }
    std::size_t hot = 0;
    while (!values[g.begin + hot]) ++hot;
    raw[feature.name] = feature.kind == FeatureKind::categorical ? feature.levels[hot]
                                                                 : schema.bin_label(l, hot);
  }
  return raw;
}

void validate_instance_set(const InstanceSet& set) {
  if (!set.schema) throw Error(Errc::invalid_instance, "instance set has no schema");
  if (set.instances.empty()) throw Error(Errc::invalid_instance, "instance set is empty");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const auto& instance = set.instances[i];
    if (!set.schema->is_valid(instance.values)) {
      throw Error(Errc::invalid_instance,
                  "instance '" + instance.source_id + "' violates the schema", {i});
    }
    if (!ids.insert(instance.source_id).second) {
      throw Error(Errc::invalid_instance, "duplicate source id '" + instance.source_id + "'", {i});
    }
  }
  if (!set.labels.empty() && set.labels.size() != set.instances.size()) {
    throw Error(Errc::invalid_instance, "label count does not match instance count");
  }
}

InstanceSet make_instance_set(std::shared_ptr<const FeatureSchema> schema,
                              std::vector<BinaryInstance> instances) {
  InstanceSet set{std::move(schema), std::move(instances), {}};
  validate_instance_set(set);
  return set;
}

InstanceSet load_csv(const std::filesystem::path& path,
                     std::shared_ptr<const FeatureSchema> schema,
                     const CsvLoadConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open data file " + path.string());
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw Error(Errc::header_mismatch, path.string() + " is empty");

  std::optional<std::size_t> id_col;
  std::optional<std::size_t> label_col;
  std::vector<std::optional<std::size_t>> feature_col(schema->original_size());
  for (std::size_t c = 0; c < header->size(); ++c) {
    const std::string& name = (*header)[c];
    if (!config.id_column.empty() && name == config.id_column) {
      id_col = c;
    } else if (!config.label_column.empty() && name == config.label_column) {
      label_col = c;
    } else if (auto l = schema->find(name)) {
      if (feature_col[*l]) throw Error(Errc::header_mismatch, "column '" + name + "' repeated");
      feature_col[*l] = c;
    } else {
      throw Error(Errc::header_mismatch, "unexpected column '" + name + "'");
    }
  }
  for (std::size_t l = 0; l < feature_col.size(); ++l) {
    if (!feature_col[l]) {
      throw Error(Errc::header_mismatch,
                  "missing column for feature '" + schema->features()[l].name + "'");
    }
  }
  if (!config.id_column.empty() && !id_col) {
    throw Error(Errc::header_mismatch, "missing id column '" + config.id_column + "'");
  }
  if (!config.label_column.empty() && !label_col) {
    throw Error(Errc::header_mismatch, "missing label column '" + config.label_column + "'");
  }

  InstanceSet set;
  set.schema = schema;
  while (auto row = reader.next()) {
    const std::size_t line = reader.line();
    if (row->size() == 1 && (*row)[0].empty()) continue;  // blank line
    if (row->size() != header->size()) {
      throw Error(Errc::row_encoding,
                  "line " + std::to_string(line) + ": expected " +
                      std::to_string(header->size()) + " fields, got " +
                      std::to_string(row->size()),
                  {line});
    }
    RawRecord raw;
    for (std::size_t l = 0; l < feature_col.size(); ++l) {
      raw[schema->features()[l].name] = (*row)[*feature_col[l]];
    }
    std::string id = id_col ? (*row)[*id_col] : "row" + std::to_string(line);
    try {
      set.instances.push_back(encode_row(*schema, raw, std::move(id)));
    } catch (const Error& e) {
      throw Error(Errc::row_encoding, "line " + std::to_string(line) + ": " + e.what(), {line});
    }
    if (label_col) {
      const std::string& text = (*row)[*label_col];
      if (text != "0" && text != "1") {
        throw Error(Errc::row_encoding,
                    "line " + std::to_string(line) + ": label must be 0 or 1", {line});
      }
      set.labels.push_back(text == "1" ? 1 : 0);
    }
  }
  validate_instance_set(set);
  return set;
}

}  // namespace groupcf
