#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "groupcf/classifier.hpp"
#include "groupcf/error.hpp"
#include "oracles.hpp"

using namespace groupcf;

namespace {

BitVector bits(std::uint64_t value, std::size_t width) {
  BitVector v(width);
  for (std::size_t h = 0; h < width; ++h) v[h] = (value >> h) & 1U;
  return v;
}

ReluNetwork xor_network() {
  ReluNetwork net;
  net.layers.push_back({{{1, -1}, {-1, 1}}, {0, 0}});
  net.layers.push_back({{{1, 1}}, {-0.5}});
  return net;
}

}  // namespace

TEST_CASE("logistic model with zero weights predicts one half") {
  const ClassifierModel m(LogisticModel{{0, 0, 0}, 0});
  for (std::uint64_t x = 0; x < 8; ++x) CHECK(m.predict_proba(bits(x, 3)) == doctest::Approx(0.5));
}

TEST_CASE("logistic model matches a hand computed score") {
  const ClassifierModel m(LogisticModel{{1.0, -2.0, 0.5}, 0.25});
  const BitVector x{1, 0, 1};
  CHECK(m.logit(std::span<const std::uint8_t>(x)) == doctest::Approx(1.75));
  CHECK(m.predict_proba(x) == doctest::Approx(1.0 / (1.0 + std::exp(-1.75))));
  const BitVector y{0, 1, 0};
  CHECK(m.predict_proba(y) == doctest::Approx(1.0 / (1.0 + std::exp(1.75))));
}

TEST_CASE("relu network forward pass matches hand propagation") {
  ReluNetwork net;
  net.layers.push_back({{{1, 0}, {0, 1}}, {0, -0.5}});
  net.layers.push_back({{{1, 2}}, {-1}});
  const ClassifierModel m(net);
  CHECK(m.logit(std::span<const std::uint8_t>(BitVector{1, 1})) == doctest::Approx(1.0));
  CHECK(m.logit(std::span<const std::uint8_t>(BitVector{0, 1})) == doctest::Approx(0.0));
  CHECK(m.logit(std::span<const std::uint8_t>(BitVector{1, 0})) == doctest::Approx(0.0));
  CHECK(m.logit(std::span<const std::uint8_t>(BitVector{0, 0})) == doctest::Approx(-1.0));
}

TEST_CASE("input width mismatch is reported") {
  const ClassifierModel m(LogisticModel{{1, 1}, 0});
  try {
    m.predict_proba(BitVector{1, 0, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
}

TEST_CASE("malformed models are rejected") {
  auto code_of = [](auto&& make) {
    try {
      make();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::infeasible;
  };
  CHECK(code_of([] { ClassifierModel(LogisticModel{{1}, 0}, 1.0); }) == Errc::invalid_model);
  CHECK(code_of([] { ClassifierModel(LogisticModel{{NAN}, 0}); }) == Errc::invalid_model);
  ReluNetwork two_out;
  two_out.layers.push_back({{{1, 0}, {0, 1}}, {0, 0}});
  CHECK(code_of([&] { ClassifierModel{two_out}; }) == Errc::invalid_model);
  ReluNetwork broken_chain;
  broken_chain.layers.push_back({{{1, 0}, {0, 1}}, {0, 0}});
  broken_chain.layers.push_back({{{1, 1, 1}}, {0}});
  CHECK(code_of([&] { ClassifierModel{broken_chain}; }) == Errc::invalid_model);
}

TEST_CASE("logistic embedding is a single threshold row") {
  const ClassifierModel m(LogisticModel{{2.0, -1.0, 0.0}, 0.5});
  MipModel mip;
  std::vector<VarId> in{mip.add_binary("a"), mip.add_binary("b"), mip.add_binary("c")};
  const ConstraintFragment frag = embed(m, mip, in);
  REQUIRE(mip.num_constraints() == 1);
  const Constraint& row = mip.constraints()[frag.threshold_row.index];
  CHECK(row.sense == Sense::ge);
  CHECK(row.rhs == doctest::Approx(-0.5));
  CHECK(row.terms.size() == 2);
  CHECK(frag.indicators.empty());
}

TEST_CASE("threshold is taken in logit space") {
  const ClassifierModel m(LogisticModel{{1.0}, -1.0}, 0.7);
  CHECK(m.threshold_logit() == doctest::Approx(std::log(0.7 / 0.3)));
  const ClassifierModel tie(LogisticModel{{1.0}, -1.0});
  CHECK(tie.is_positive(BitVector{1}));
  CHECK(groupcf::oracle::fragment_feasible(tie, BitVector{1}));
  CHECK_FALSE(groupcf::oracle::fragment_feasible(tie, BitVector{0}));
}

TEST_CASE("tiny relu embedding agrees with prediction on every input") {
  const ClassifierModel m(xor_network());
  for (std::uint64_t x = 0; x < 4; ++x) {
    const BitVector v = bits(x, 2);
    CHECK(groupcf::oracle::fragment_feasible(m, v) == (m.predict_proba(v) >= 0.5));
  }
  MipModel mip;
  std::vector<VarId> in{mip.add_binary("a"), mip.add_binary("b")};
  const ConstraintFragment frag = embed(m, mip, in);
  CHECK(frag.indicators.size() == 2);
  CHECK(frag.rows.size() == 7);
}

TEST_CASE("stable units are folded without indicators") {
  ReluNetwork net;
  // unit 0 always active, unit 1 always inactive
  net.layers.push_back({{{1, 1}, {-1, -1}}, {0.5, -0.5}});
  net.layers.push_back({{{1, 3}}, {-1}});
  const ClassifierModel m(net);
  MipModel mip;
  std::vector<VarId> in{mip.add_binary("a"), mip.add_binary("b")};
  const ConstraintFragment frag = embed(m, mip, in);
  CHECK(frag.indicators.empty());
  CHECK(mip.num_constraints() == 1);
  for (std::uint64_t x = 0; x < 4; ++x) {
    const BitVector v = bits(x, 2);
    CHECK(groupcf::oracle::fragment_feasible(m, v) == m.is_positive(v));
  }
}

TEST_CASE("interval bounds contain every reachable pre-activation") {
  testing::Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t width = 2 + trial % 7;
    std::vector<BitVector> support;
    for (std::uint64_t x = 0; x < (1ULL << width); ++x) support.push_back(bits(x, width));
    const ClassifierModel m = testing::random_relu(rng, support, {5, 4});
    const auto bounds = m.hidden_bounds();
    const auto& layers = m.network().layers;
    for (const auto& v : support) {
      std::vector<double> act(v.begin(), v.end());
      for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
        std::vector<double> next(layers[k].outputs());
        for (std::size_t o = 0; o < next.size(); ++o) {
          double p = layers[k].bias[o];
          for (std::size_t i = 0; i < act.size(); ++i) p += layers[k].weights[o][i] * act[i];
          CHECK(p >= bounds[k][o].lower - 1e-12);
          CHECK(p <= bounds[k][o].upper + 1e-12);
          next[o] = std::max(0.0, p);
        }
        act = std::move(next);
      }
    }
  }
}

TEST_CASE("embedding is sound and complete on random models") {
  testing::Rng rng(5);
  for (int trial = 0; trial < 16; ++trial) {
    const std::size_t width = 3 + trial % 4;
    std::vector<BitVector> support;
    for (std::uint64_t x = 0; x < (1ULL << width); ++x) support.push_back(bits(x, width));
    const ClassifierModel m = trial % 2 == 0 ? testing::random_lr(rng, support)
                                             : testing::random_relu(rng, support, {4, 3});
    for (const auto& v : support) {
      CHECK(groupcf::oracle::fragment_feasible(m, v) == m.is_positive(v));
    }
  }
}

TEST_CASE("activation overflow is reported") {
  ReluNetwork net;
  net.layers.push_back({{{1e308, 1e308}}, {0}});
  net.layers.push_back({{{1}}, {0}});
  const ClassifierModel m(net);
  MipModel mip;
  std::vector<VarId> in{mip.add_binary("a"), mip.add_binary("b")};
  try {
    embed(m, mip, in);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unbounded_activation);
  }
}

TEST_CASE("model files round trip losslessly") {
  testing::Rng rng(3);
  std::vector<BitVector> support;
  for (std::uint64_t x = 0; x < 64; ++x) support.push_back(bits(x, 6));
  LogisticModel odd{{0.1, -1.0 / 3.0, 2.5e-7, 7, -0.0, 1e10}, std::sqrt(2.0)};
  const std::vector<ClassifierModel> models{
      ClassifierModel(odd, 0.3), testing::random_relu(rng, support, {5, 4})};
  const auto dir = std::filesystem::temp_directory_path() / "groupcf_test_classifier";
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto path = dir / ("model" + std::to_string(k) + ".json");
    save_model(models[k], path);
    const ClassifierModel back = load_model(path);
    CHECK(back.tau() == models[k].tau());
    CHECK(model_to_json(back) == model_to_json(models[k]));
    for (const auto& v : support) CHECK(back.predict_proba(v) == models[k].predict_proba(v));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("model json format") {
  const auto doc = nlohmann::json::parse(
      R"({"variant":"relu","tau":0.6,"layers":[{"W":[[1,-1]],"b":[0.5]},{"W":[[2]],"b":[-1]}]})");
  const ClassifierModel m = model_from_json(doc);
  CHECK_FALSE(m.is_logistic());
  CHECK(m.tau() == 0.6);
  CHECK(m.input_width() == 2);
  CHECK(m.logit(std::span<const std::uint8_t>(BitVector{1, 0})) == doctest::Approx(2.0));
  try {
    model_from_json(nlohmann::json::parse(R"({"variant":"svm"})"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_model);
  }
}

TEST_CASE("logistic training reaches a stationary point") {
  auto schema = std::make_shared<const FeatureSchema>(build_schema(
      {{"a", FeatureKind::binary, {}, {}}, {"b", FeatureKind::binary, {}, {}},
       {"c", FeatureKind::binary, {}, {}}}));
  std::vector<BitVector> points;
  std::vector<int> labels;
  for (std::uint64_t x = 0; x < 8; ++x) {
    for (int rep = 0; rep < 3; ++rep) {
      points.push_back(bits(x, 3));
      // mostly driven by feature a, with label noise
      labels.push_back(((x & 1U) != 0) != (rep == 2 && x % 3 == 0) ? 1 : 0);
    }
  }
  InstanceSet data = testing::make_set(schema, points);
  data.labels = labels;
  const double C = 10.0;
  const ClassifierModel m = train_lr(data, C);
  const auto& lr = m.logistic();
  CHECK(lr.weights[0] > 1.0);

  // gradient of 0.5|w|^2 + C sum logloss, intercept unpenalised
  std::vector<double> grad(4, 0.0);
  for (std::size_t h = 0; h < 3; ++h) grad[h] = lr.weights[h];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = C * (m.predict_proba(points[i]) - labels[i]);
    for (std::size_t h = 0; h < 3; ++h) grad[h] += r * points[i][h];
    grad[3] += r;
  }
  for (double g : grad) CHECK(std::abs(g) < 1e-6);

  const ClassifierModel again = train_lr(data, C);
  CHECK(model_to_json(again) == model_to_json(m));
}

TEST_CASE("training needs both classes") {
  auto schema = std::make_shared<const FeatureSchema>(
      build_schema({{"a", FeatureKind::binary, {}, {}}}));
  InstanceSet data = testing::make_set(schema, {BitVector{0}, BitVector{1}});
  data.labels = {1, 1};
  try {
    train_lr(data);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::single_class_data);
  }
}
