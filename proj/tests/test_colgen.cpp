#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "groupcf/colgen.hpp"
#include "groupcf/error.hpp"
#include "groupcf/validate.hpp"
#include "oracles.hpp"

using namespace groupcf;

namespace {

std::shared_ptr<const FeatureSchema> three_binary() {
  return std::make_shared<const FeatureSchema>(build_schema({{"a", FeatureKind::binary, {}, {}},
                                                             {"b", FeatureKind::binary, {}, {}},
                                                             {"c", FeatureKind::binary, {}, {}}}));
}

ClassifierModel majority() { return ClassifierModel(LogisticModel{{1, 1, 1}, -1.5}); }

ColgenOptions options_for(std::size_t tmax) {
  ColgenOptions opt;
  opt.tmax = tmax;
  return opt;
}

double mask_weight(std::uint64_t mask, const std::vector<double>& w) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (mask >> i & 1) total += w[i];
  }
  return total;
}

}  // namespace

TEST_CASE("a single instance needs one column and is certified") {
  const auto set = testing::make_set(three_binary(), {BitVector{0, 0, 0}});
  const ColgenResult r = run_colgen(set, majority(), options_for(3));
  CHECK(r.explanation.objective == 1);
  CHECK(r.converged);
  CHECK(r.certified);
  CHECK(r.explanation.status == SolveStatus::optimal);
}

TEST_CASE("identical instances share the initial column") {
  const auto set = testing::make_set(three_binary(), {BitVector{1, 0, 0}, BitVector{1, 0, 0}});
  const ColgenState s = initialize(set, majority(), 1);
  CHECK(s.active.size() == 1);
  const ColgenResult r = run_colgen(set, majority(), options_for(1));
  CHECK(r.explanation.objective == 1);
  CHECK(r.explanation.assignment == std::vector<std::size_t>{0, 0});
}

TEST_CASE("initial columns are as sparse as the exhaustive search") {
  for (const auto& f : testing::fixture_suite(8, 31, 8, 6)) {
    CAPTURE(f.name);
    const ColgenState s = initialize(f.instances, *f.model, f.tmax);
    for (std::size_t i = 0; i < f.instances.size(); ++i) {
      const auto best = oracle::sparsest_change(*f.schema, *f.model, f.instances[i].values, f.tmax);
      REQUIRE(best);
      const bool sparsest = std::any_of(s.active.begin(), s.active.end(), [&](const Column& c) {
        return c.coverage[i] == 1 && c.features.size() == *best;
      });
      CHECK(sparsest);
    }
    for (const Column& c : s.active) CHECK(f.model->is_positive(c.values));
  }
}

TEST_CASE("pricing optimum matches enumeration for integer weights") {
  testing::Rng rng(77);
  for (const auto& f : testing::fixture_suite(8, 41, 8, 6)) {
    CAPTURE(f.name);
    const auto masks = oracle::all_cover_masks(f.instances, *f.model, f.tmax);
    std::vector<double> w(f.instances.size());
    for (auto& x : w) x = static_cast<double>(rng() % 4);
    const MipModel pricing = build_pricing(f.instances, *f.model, f.tmax, w);
    const MipSolution sol = solve_mip(pricing);
    REQUIRE(sol.status == MipStatus::optimal);
    CHECK(sol.objective == doctest::Approx(oracle::pricing_optimum(masks, w)));
  }
}

TEST_CASE("pricing optimum matches enumeration under master duals") {
  for (const auto& f : testing::fixture_suite(6, 43, 8, 6)) {
    CAPTURE(f.name);
    const ColgenState s = initialize(f.instances, *f.model, f.tmax);
    const LpSolution lp = solve_lp(build_rmp(s, f.instances.size()));
    REQUIRE(lp.status == LpStatus::optimal);
    const auto masks = oracle::all_cover_masks(f.instances, *f.model, f.tmax);
    const MipSolution sol = solve_mip(build_pricing(f.instances, *f.model, f.tmax, lp.duals));
    REQUIRE(sol.status == MipStatus::optimal);
    CHECK(sol.objective == doctest::Approx(oracle::pricing_optimum(masks, lp.duals)));
  }
}

TEST_CASE("extracted columns price out and are valid") {
  for (const auto& f : testing::fixture_suite(6, 47, 8, 6)) {
    CAPTURE(f.name);
    const ColgenState s = initialize(f.instances, *f.model, f.tmax);
    const LpSolution lp = solve_lp(build_rmp(s, f.instances.size()));
    const MipModel pricing = build_pricing(f.instances, *f.model, f.tmax, lp.duals);
    const MipSolution sol = solve_mip(pricing);
    for (const auto& pc : extract_columns(pricing, sol, f.instances, *f.model, lp.duals, s.active,
                                          1.0 + 1e-6)) {
      CHECK(pc.value > 1.0 + 1e-6);
      CHECK(f.model->is_positive(pc.column.values));
      CHECK(pc.column.features.size() <= f.tmax);
      CHECK(oracle::coverage_mask(*f.schema, f.instances, pc.column.values, pc.column.features) ==
            [&] {
              std::uint64_t m = 0;
              for (std::size_t i = 0; i < pc.column.coverage.size(); ++i) {
                if (pc.column.coverage[i]) m |= std::uint64_t{1} << i;
              }
              return m;
            }());
      for (std::size_t i : pc.selected) CHECK(pc.column.coverage[i] == 1);
      for (const auto& r :
           refine(pc, lp.duals, f.instances, *f.model, f.tmax, s.active)) {
        CHECK(f.model->is_positive(r.column.values));
        CHECK(r.column.features.size() <= f.tmax);
      }
    }
  }
}

TEST_CASE("converged objective matches exhaustive set cover") {
  for (const auto& f : testing::fixture_suite(10, 53, 9, 7)) {
    CAPTURE(f.name);
    std::ostringstream trace;
    ColgenOptions opt = options_for(f.tmax);
    opt.trace = &trace;
    const ColgenResult r = run_colgen(f.instances, *f.model, opt);
    REQUIRE(r.converged);
    const auto masks = oracle::all_cover_masks(f.instances, *f.model, f.tmax);
    const std::size_t optimum = *oracle::min_set_cover(masks, f.instances.size());
    CHECK(r.explanation.objective >= optimum);
    CHECK(r.lp_lower_bound <= optimum);
    if (r.certified) CHECK(r.explanation.objective == optimum);
    CHECK(validate_explanation(f.instances, *f.model, r.explanation, f.tmax).ok());

    // The final duals are feasible for every column, not just generated ones.
    for (std::uint64_t m : masks) CHECK(mask_weight(m, r.duals) <= 1.0 + 1e-6);

    // Master LP never increases and strong duality holds at each solve.
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      CHECK(r.trace[k].dual_value == doctest::Approx(r.trace[k].lp_value).epsilon(1e-9));
      if (k > 0) CHECK(r.trace[k].lp_value <= r.trace[k - 1].lp_value + 1e-9);
    }
    std::size_t lines = 0;
    std::istringstream in(trace.str());
    for (std::string line; std::getline(in, line); ++lines) {
      CHECK(nlohmann::json::parse(line).contains("lp_value"));
    }
    CHECK(lines == r.trace.size());
  }
}

TEST_CASE("refinement does not change the proven optimum") {
  for (const auto& f : testing::fixture_suite(4, 59, 8, 6)) {
    CAPTURE(f.name);
    ColgenOptions opt = options_for(f.tmax);
    const ColgenResult with = run_colgen(f.instances, *f.model, opt);
    opt.refine = false;
    const ColgenResult without = run_colgen(f.instances, *f.model, opt);
    CHECK(with.converged);
    CHECK(without.converged);
    CHECK(with.lp_value == doctest::Approx(without.lp_value));
  }
}

TEST_CASE("partial pricing reaches the same master optimum") {
  for (const auto& f : testing::fixture_suite(4, 61, 8, 6)) {
    CAPTURE(f.name);
    ColgenOptions opt = options_for(f.tmax);
    const ColgenResult partial = run_colgen(f.instances, *f.model, opt);
    opt.pricing_stop = 0;
    const ColgenResult full = run_colgen(f.instances, *f.model, opt);
    CHECK(partial.converged);
    CHECK(full.converged);
    CHECK(partial.lp_value == doctest::Approx(full.lp_value));
    CHECK(partial.explanation.objective == full.explanation.objective);
  }
}

TEST_CASE("master rows follow instance order") {
  ColgenState s;
  s.active.push_back(Column{{1, 1, 0}, {0}, {1, 0, 1}});
  s.active.push_back(Column{{1, 1, 1}, {1}, {0, 1, 1}});
  const MipModel lp = build_rmp(s, 3);
  CHECK(lp.group("y").size() == 2);
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective == doctest::Approx(2.0));
  CHECK(dual_objective(lp, sol) == doctest::Approx(2.0));
}

TEST_CASE("instances without a counterfactual are reported by id") {
  const auto set = testing::make_set(three_binary(), {BitVector{1, 0, 0}, BitVector{0, 0, 0}});
  try {
    run_colgen(set, majority(), options_for(1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::infeasible);
    CHECK(e.ids() == std::vector<std::size_t>{1});
  }
}

TEST_CASE("positive instances and bad configuration are rejected") {
  const auto set = testing::make_set(three_binary(), {BitVector{0, 0, 0}, BitVector{1, 1, 0}});
  try {
    run_colgen(set, majority(), options_for(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_negative);
    CHECK(e.ids() == std::vector<std::size_t>{1});
  }
  const auto ok = testing::make_set(three_binary(), {BitVector{0, 0, 0}});
  try {
    run_colgen(ok, majority(), options_for(4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_config);
  }
}

TEST_CASE("iteration limit still returns a valid cover") {
  const auto f = testing::fixture_suite(1, 61, 9, 7).front();
  ColgenOptions opt = options_for(f.tmax);
  opt.max_iterations = 0;
  const ColgenResult r = run_colgen(f.instances, *f.model, opt);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.certified);
  CHECK(validate_explanation(f.instances, *f.model, r.explanation, f.tmax).ok());
}
