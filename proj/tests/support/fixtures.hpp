#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "groupcf/classifier.hpp"
#include "groupcf/schema.hpp"

namespace groupcf::testing {

using Rng = std::mt19937_64;

// Random mix of binary, categorical and numeric features whose expansion
// has exactly `expanded` columns.
std::shared_ptr<const FeatureSchema> random_schema(Rng& rng, std::size_t expanded);

// Five original features expanding to fifteen columns.
std::shared_ptr<const FeatureSchema> compas_like_schema();

// Every schema-valid point of {0,1}^|T̄|.
std::vector<BitVector> valid_vectors(const FeatureSchema& schema);

// Weights on the quarter grid with the output bias offset by half a grid
// step, so no schema-valid input lands exactly on the threshold. The bias is
// centred on the median score over `support` to balance the classes.
ClassifierModel random_lr(Rng& rng, const std::vector<BitVector>& support);
ClassifierModel random_relu(Rng& rng, const std::vector<BitVector>& support,
                            const std::vector<std::size_t>& hidden);

struct Fixture {
  std::string name;
  std::shared_ptr<const FeatureSchema> schema;
  std::shared_ptr<const ClassifierModel> model;
  InstanceSet instances;
  std::size_t tmax = 1;
};

// Samples negatives (with repetition allowed) from the valid points. Returns
// nullopt when the model is constant on the valid points or some sampled
// instance has no positive point within `tmax` changed features.
std::optional<Fixture> random_fixture(Rng& rng, std::size_t expanded, std::size_t instances,
                                      std::size_t tmax, bool relu);

// Deterministic list of feasible fixtures cycling through sizes, tmax in
// {1,2,3} and both model families.
std::vector<Fixture> fixture_suite(std::size_t count, std::uint64_t seed,
                                   std::size_t max_expanded = 10, std::size_t max_instances = 8);

InstanceSet make_set(std::shared_ptr<const FeatureSchema> schema,
                     const std::vector<BitVector>& points);

}  // namespace groupcf::testing
