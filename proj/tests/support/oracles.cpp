#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "groupcf/solver.hpp"

namespace groupcf::oracle {

namespace {

std::vector<BitVector> enumerate_valid(const FeatureSchema& schema) {
  std::vector<BitVector> out;
  const std::size_t width = schema.expanded_size();
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << width); ++bits) {
    BitVector v(width);
    for (std::size_t h = 0; h < width; ++h) v[h] = (bits >> h) & 1U;
    if (schema.is_valid(v)) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::uint64_t coverage_mask(const FeatureSchema& schema, const InstanceSet& instances,
                            const BitVector& v, const std::vector<std::size_t>& features) {
  std::vector<bool> allowed(schema.original_size(), false);
  for (std::size_t l : features) allowed[l] = true;
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    bool ok = true;
    for (std::size_t h = 0; h < v.size() && ok; ++h) {
      if (instances[i].values[h] != v[h] && !allowed[schema.owner(h)]) ok = false;
    }
    if (ok) mask |= std::uint64_t{1} << i;
  }
  return mask;
}

std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (current.size() == k) {
      out.push_back(current);
      return;
    }
    for (std::size_t j = start; j < n; ++j) {
      current.push_back(j);
      self(self, j + 1);
      current.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

std::vector<BitVector> positive_points(const FeatureSchema& schema, const ClassifierModel& model) {
  std::vector<BitVector> out;
  for (auto& v : enumerate_valid(schema)) {
    if (model.predict_proba(v) >= model.tau()) out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::uint64_t> all_cover_masks(const InstanceSet& instances,
                                           const ClassifierModel& model, std::size_t tmax) {
  const FeatureSchema& schema = *instances.schema;
  const auto sets = subsets(schema.original_size(), std::min(tmax, schema.original_size()));
  std::set<std::uint64_t> masks;
  for (const auto& v : positive_points(schema, model)) {
    for (const auto& f : sets) {
      const std::uint64_t m = coverage_mask(schema, instances, v, f);
      if (m != 0) masks.insert(m);
    }
  }
  return {masks.begin(), masks.end()};
}

std::vector<std::uint64_t> maximal_masks(std::vector<std::uint64_t> masks) {
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  std::vector<std::uint64_t> out;
  for (std::uint64_t m : masks) {
    const bool dominated = std::any_of(masks.begin(), masks.end(), [&](std::uint64_t o) {
      return o != m && (o & m) == m;
    });
    if (!dominated) out.push_back(m);
  }
  return out;
}

double pricing_optimum(const std::vector<std::uint64_t>& masks, const std::vector<double>& w) {
  double best = 0.0;
  for (std::uint64_t m : masks) {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if ((m >> i) & 1U) total += w[i];
    }
    best = std::max(best, total);
  }
  return best;
}

std::optional<std::size_t> min_set_cover(const std::vector<std::uint64_t>& masks, std::size_t n) {
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  const auto useful = maximal_masks(masks);
  std::vector<int> dist(full + 1, -1);
  std::deque<std::uint64_t> queue{0};
  dist[0] = 0;
  while (!queue.empty()) {
    const std::uint64_t s = queue.front();
    queue.pop_front();
    if (s == full) return static_cast<std::size_t>(dist[s]);
    for (std::uint64_t m : useful) {
      const std::uint64_t t = s | (m & full);
      if (dist[t] < 0) {
        dist[t] = dist[s] + 1;
        queue.push_back(t);
      }
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> sparsest_change(const FeatureSchema& schema,
                                           const ClassifierModel& model, const BitVector& instance,
                                           std::size_t tmax) {
  std::optional<std::size_t> best;
  for (const auto& v : positive_points(schema, model)) {
    std::size_t changed = 0;
    for (std::size_t l = 0; l < schema.original_size(); ++l) {
      const FeatureGroup& g = schema.group(l);
      for (std::size_t h = g.begin; h < g.end(); ++h) {
        if (instance[h] != v[h]) {
          ++changed;
          break;
        }
      }
    }
    if (changed <= tmax && (!best || changed < *best)) best = changed;
  }
  return best;
}

bool fragment_feasible(const ClassifierModel& model, const BitVector& v) {
  MipModel mip;
  std::vector<VarId> inputs;
  for (std::size_t h = 0; h < v.size(); ++h) {
    const VarId x = mip.add_binary("x" + std::to_string(h));
    mip.set_bounds(x, v[h], v[h]);
    inputs.push_back(x);
  }
  embed(model, mip, inputs);
  const MipSolution sol = solve_mip(mip);
  return sol.has_incumbent();
}

}  // namespace groupcf::oracle
