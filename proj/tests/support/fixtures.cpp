#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"

namespace groupcf::testing {

namespace {

double quarter(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng) / 4.0;
}

double median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<long>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

std::shared_ptr<const FeatureSchema> random_schema(Rng& rng, std::size_t expanded) {
  std::vector<OriginalFeature> features;
  std::size_t remaining = expanded;
  while (remaining > 0) {
    OriginalFeature f;
    f.name = "f" + std::to_string(features.size());
    const int pick = remaining == 1 ? 0 : std::uniform_int_distribution<int>(0, 2)(rng);
    if (pick == 0) {
      f.kind = FeatureKind::binary;
      remaining -= 1;
    } else {
      const std::size_t size = std::uniform_int_distribution<std::size_t>(
          2, std::min<std::size_t>(4, remaining))(rng);
      if (pick == 1) {
        f.kind = FeatureKind::categorical;
        for (std::size_t j = 0; j < size; ++j) f.levels.push_back(std::string(1, char('a' + j)));
      } else {
        f.kind = FeatureKind::numeric;
        for (std::size_t j = 1; j < size; ++j) f.edges.push_back(10.0 * static_cast<double>(j));
      }
      remaining -= size;
    }
    features.push_back(std::move(f));
  }
  return std::make_shared<const FeatureSchema>(build_schema(std::move(features)));
}

std::shared_ptr<const FeatureSchema> compas_like_schema() {
  std::vector<OriginalFeature> features;
  features.push_back({"sex", FeatureKind::binary, {}, {}});
  features.push_back({"age", FeatureKind::numeric, {}, {25, 45}});
  features.push_back({"race", FeatureKind::categorical, {"a", "b", "c", "d"}, {}});
  features.push_back({"priors", FeatureKind::numeric, {}, {0, 3, 10}});
  features.push_back({"charge", FeatureKind::categorical, {"felony", "misdemeanor", "other"}, {}});
  return std::make_shared<const FeatureSchema>(build_schema(std::move(features)));
}

std::vector<BitVector> valid_vectors(const FeatureSchema& schema) {
  std::vector<BitVector> out{BitVector(schema.expanded_size(), 0)};
  for (std::size_t l = 0; l < schema.original_size(); ++l) {
    const FeatureGroup& g = schema.group(l);
    std::vector<BitVector> next;
    for (const auto& partial : out) {
      if (g.size == 1) {
        for (std::uint8_t bit : {0, 1}) {
          next.push_back(partial);
          next.back()[g.begin] = bit;
        }
      } else {
        for (std::size_t h = g.begin; h < g.end(); ++h) {
          next.push_back(partial);
          next.back()[h] = 1;
        }
      }
    }
    out = std::move(next);
  }
  return out;
}

ClassifierModel random_lr(Rng& rng, const std::vector<BitVector>& support) {
  const std::size_t width = support.front().size();
  LogisticModel lr;
  for (std::size_t h = 0; h < width; ++h) lr.weights.push_back(quarter(rng, -8, 8));
  std::vector<double> scores;
  for (const auto& v : support) {
    double s = 0.0;
    for (std::size_t h = 0; h < width; ++h) s += lr.weights[h] * v[h];
    scores.push_back(s);
  }
  lr.bias = -std::round(median(scores) * 4.0) / 4.0 + 0.125;
  return ClassifierModel(std::move(lr));
}

ClassifierModel random_relu(Rng& rng, const std::vector<BitVector>& support,
                            const std::vector<std::size_t>& hidden) {
  ReluNetwork net;
  std::size_t width = support.front().size();
  for (std::size_t units : hidden) {
    DenseLayer layer;
    for (std::size_t o = 0; o < units; ++o) {
      std::vector<double> row;
      for (std::size_t i = 0; i < width; ++i) row.push_back(quarter(rng, -4, 4));
      layer.weights.push_back(std::move(row));
      layer.bias.push_back(quarter(rng, -4, 4));
    }
    net.layers.push_back(std::move(layer));
    width = units;
  }
  DenseLayer out;
  out.weights.emplace_back();
  for (std::size_t i = 0; i < width; ++i) out.weights[0].push_back(quarter(rng, -4, 4));
  out.bias.push_back(0.0);
  net.layers.push_back(out);

  const ClassifierModel raw(net);
  std::vector<double> scores;
  for (const auto& v : support) scores.push_back(raw.logit(std::span<const std::uint8_t>(v)));
  const double grid = std::pow(0.25, static_cast<double>(hidden.size() + 1));
  net.layers.back().bias[0] = -std::round(median(scores) / grid) * grid + grid / 2.0;
  return ClassifierModel(std::move(net));
}

InstanceSet make_set(std::shared_ptr<const FeatureSchema> schema,
                     const std::vector<BitVector>& points) {
  std::vector<BinaryInstance> instances;
  for (std::size_t i = 0; i < points.size(); ++i) {
    instances.push_back({points[i], "i" + std::to_string(i)});
  }
  return make_instance_set(std::move(schema), std::move(instances));
}

std::optional<Fixture> random_fixture(Rng& rng, std::size_t expanded, std::size_t instances,
                                      std::size_t tmax, bool relu) {
  auto schema = random_schema(rng, expanded);
  if (tmax > schema->original_size()) return std::nullopt;
  const auto support = valid_vectors(*schema);
  auto model = std::make_shared<const ClassifierModel>(
      relu ? random_relu(rng, support, {4, 3}) : random_lr(rng, support));

  std::vector<BitVector> negatives;
  std::size_t positives = 0;
  for (const auto& v : support) {
    if (model->is_positive(v)) {
      ++positives;
    } else {
      negatives.push_back(v);
    }
  }
  if (positives == 0 || negatives.empty()) return std::nullopt;

  std::vector<BitVector> picked;
  std::uniform_int_distribution<std::size_t> pick(0, negatives.size() - 1);
  for (std::size_t i = 0; i < instances; ++i) {
    const BitVector& x = negatives[pick(rng)];
    if (!oracle::sparsest_change(*schema, *model, x, tmax)) return std::nullopt;
    picked.push_back(x);
  }
  Fixture f;
  f.schema = schema;
  f.model = std::move(model);
  f.instances = make_set(schema, picked);
  f.tmax = tmax;
  return f;
}

std::vector<Fixture> fixture_suite(std::size_t count, std::uint64_t seed,
                                   std::size_t max_expanded, std::size_t max_instances) {
  Rng rng(seed);
  std::vector<Fixture> out;
  while (out.size() < count) {
    const std::size_t idx = out.size();
    const std::size_t tmax = 1 + idx % 3;
    const bool relu = idx % 2 == 1;
    const std::size_t expanded = std::uniform_int_distribution<std::size_t>(6, max_expanded)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(3, max_instances)(rng);
    if (auto f = random_fixture(rng, expanded, n, tmax, relu)) {
      f->name = "fixture" + std::to_string(idx) + (relu ? "_relu" : "_lr") + "_t" +
                std::to_string(tmax) + "_n" + std::to_string(n) + "_w" + std::to_string(expanded);
      out.push_back(std::move(*f));
    }
  }
  return out;
}

}  // namespace groupcf::testing
