#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace groupcf {

using BitVector = std::vector<std::uint8_t>;

enum class FeatureKind { binary, categorical, numeric };

std::string to_string(FeatureKind kind);

// One column of the raw dataset. Numeric features carry interior bin edges:
// edges {2, 5} describe the bins (-inf, 2], (2, 5], (5, inf).
struct OriginalFeature {
  std::string name;
  FeatureKind kind = FeatureKind::binary;
  std::vector<std::string> levels;
  std::vector<double> edges;
};

// Contiguous range of expanded (binary) columns owned by one original feature.
struct FeatureGroup {
  std::size_t begin = 0;
  std::size_t size = 0;

  std::size_t end() const { return begin + size; }
};

// Original feature set plus its binary expansion. Immutable after build.
class FeatureSchema {
 public:
  const std::vector<OriginalFeature>& features() const { return features_; }
  std::size_t original_size() const { return features_.size(); }
  std::size_t expanded_size() const { return owner_.size(); }

  const FeatureGroup& group(std::size_t feature) const { return groups_.at(feature); }
  std::size_t owner(std::size_t expanded) const { return owner_.at(expanded); }
  // Features whose expanded columns must sum to exactly one.
  const std::vector<std::size_t>& onehot_set() const { return onehot_; }
  bool is_onehot(std::size_t feature) const { return groups_.at(feature).size >= 2; }

  std::optional<std::size_t> find(const std::string& name) const;

  // Human-readable label of an expanded column, e.g. "priors=(2,5]".
  std::string column_label(std::size_t expanded) const;
  // Label of bin `bin` of a numeric feature.
  std::string bin_label(std::size_t feature, std::size_t bin) const;

  // True iff `values` has the right length, is 0/1 and satisfies the
  // one-hot constraint of every group in onehot_set().
  bool is_valid(std::span<const std::uint8_t> values) const;

 private:
  friend FeatureSchema build_schema(std::vector<OriginalFeature> features);

  std::vector<OriginalFeature> features_;
  std::vector<FeatureGroup> groups_;
  std::vector<std::size_t> owner_;
  std::vector<std::size_t> onehot_;
};

FeatureSchema build_schema(std::vector<OriginalFeature> features);

// {"features":[{"name":..., "kind":"binary|categorical|numeric",
//               "levels":[...] | "edges":[...]}]}
FeatureSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema load_schema(const std::filesystem::path& path);

struct BinaryInstance {
  BitVector values;
  std::string source_id;
};

// Raw record keyed by original feature name.
using RawRecord = std::map<std::string, std::string>;

BinaryInstance encode_row(const FeatureSchema& schema, const RawRecord& raw,
                          std::string source_id = {});

// Inverse of encode_row up to bin membership: numeric features decode to the
// label of their bin, categorical ones to their level, binary ones to "0"/"1".
RawRecord decode_row(const FeatureSchema& schema, std::span<const std::uint8_t> values);

// Index of the bin a numeric value falls into; ties on an edge go to the
// lower bin.
std::size_t bin_index(const OriginalFeature& feature, double value);

// The set S of instances to explain. `labels` is empty unless the data were
// loaded with a label column.
struct InstanceSet {
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<BinaryInstance> instances;
  std::vector<int> labels;

  std::size_t size() const { return instances.size(); }
  const BinaryInstance& operator[](std::size_t i) const { return instances[i]; }
};

// Checks non-emptiness, schema validity and unique source ids.
void validate_instance_set(const InstanceSet& set);

InstanceSet make_instance_set(std::shared_ptr<const FeatureSchema> schema,
                              std::vector<BinaryInstance> instances);

struct CsvLoadConfig {
  // Optional column holding the record identifier; row numbers otherwise.
  std::string id_column;
  // Optional 0/1 label column (needed only for training).
  std::string label_column;
};

InstanceSet load_csv(const std::filesystem::path& path,
                     std::shared_ptr<const FeatureSchema> schema,
                     const CsvLoadConfig& config = {});

}  // namespace groupcf
