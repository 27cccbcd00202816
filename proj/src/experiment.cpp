#include "groupcf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "groupcf/baseline.hpp"
#include "groupcf/colgen.hpp"
#include "groupcf/csv.hpp"
#include "groupcf/error.hpp"
#include "groupcf/report.hpp"

namespace groupcf {

namespace {

// Unbiased draw from [0, bound).
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string opt_string(const auto& value) {
  return value ? std::to_string(*value) : std::string();
}

std::string fixed(double seconds) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << seconds;
  return out.str();
}

struct CellRun {
  std::optional<GroupExplanation> colgen;
  std::optional<GroupExplanation> baseline;
};

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::colgen: return "colgen";
    case Method::baseline: return "baseline";
    case Method::both: return "both";
  }
  return "colgen";
}

Method method_from_string(const std::string& name) {
  for (auto m : {Method::colgen, Method::baseline, Method::both}) {
    if (to_string(m) == name) return m;
  }
  throw Error(Errc::invalid_config, "unknown method '" + name + "' (colgen, baseline or both)");
}

ExperimentConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base) {
  ExperimentConfig cfg;
  try {
    cfg.schema = resolve(doc.at("schema").get<std::string>(), base);
    cfg.data = resolve(doc.at("data").get<std::string>(), base);
    cfg.model = resolve(doc.at("model").get<std::string>(), base);
    cfg.id_column = doc.value("id_column", std::string());
    cfg.label_column = doc.value("label_column", std::string());
    cfg.method = method_from_string(doc.value("method", std::string("colgen")));
    cfg.sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    cfg.tmax = doc.at("tmax").get<std::vector<std::size_t>>();
    cfg.time_limit = doc.value("time_limit", cfg.time_limit);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.output_dir = resolve(doc.value("output_dir", std::string("results")), base);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("bad experiment config: ") + e.what());
  }
  if (cfg.sizes.empty() || cfg.tmax.empty()) {
    throw Error(Errc::invalid_config, "sizes and tmax grids must be non-empty");
  }
  if (std::count(cfg.sizes.begin(), cfg.sizes.end(), 0) > 0 ||
      std::count(cfg.tmax.begin(), cfg.tmax.end(), 0) > 0) {
    throw Error(Errc::invalid_config, "grid values must be positive");
  }
  if (!(cfg.time_limit > 0.0)) throw Error(Errc::invalid_config, "time_limit must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

std::optional<long> cell_gap(std::optional<std::size_t> colgen, std::optional<std::size_t> baseline) {
  if (!colgen || !baseline) return std::nullopt;
  return static_cast<long>(*colgen) - static_cast<long>(*baseline);
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) throw Error(Errc::invalid_config, "sample larger than the population");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_below(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

InstanceSet negative_instances(const InstanceSet& data, const ClassifierModel& model) {
  InstanceSet out{data.schema, {}, {}};
  for (const auto& inst : data.instances) {
    if (!model.is_positive(inst.values)) out.instances.push_back(inst);
  }
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  auto schema = std::make_shared<const FeatureSchema>(load_schema(cfg.schema));
  auto model = std::make_shared<const ClassifierModel>(load_model(cfg.model));
  if (model->input_width() != schema->expanded_size()) {
    throw Error(Errc::dimension_mismatch,
                "model expects " + std::to_string(model->input_width()) + " inputs, schema has " +
                    std::to_string(schema->expanded_size()) + " expanded columns");
  }
  CsvLoadConfig load;
  load.id_column = cfg.id_column;
  load.label_column = cfg.label_column;
  const InstanceSet data = load_csv(cfg.data, schema, load);
  const InstanceSet negatives = negative_instances(data, *model);
  if (negatives.size() == 0) {
    throw Error(Errc::no_negative_instances, "the model classifies no row of the data negative");
  }
  for (std::size_t s : cfg.sizes) {
    if (s > negatives.size()) {
      throw Error(Errc::invalid_config, "|S| = " + std::to_string(s) + " exceeds the " +
                                            std::to_string(negatives.size()) +
                                            " negative rows available");
    }
  }
  for (std::size_t t : cfg.tmax) {
    if (t > schema->original_size()) {
      throw Error(Errc::invalid_config, "tmax " + std::to_string(t) + " exceeds the " +
                                            std::to_string(schema->original_size()) +
                                            " original features");
    }
  }
  std::filesystem::create_directories(cfg.output_dir);

  const bool run_cg = cfg.method != Method::baseline;
  const bool run_mip = cfg.method != Method::colgen;
  std::vector<ResultRow> rows;
  nlohmann::json cells = nlohmann::json::array();

  for (std::size_t size : cfg.sizes) {
    InstanceSet sample{schema, {}, {}};
    for (std::size_t i : sample_indices(negatives.size(), size, cfg.seed)) {
      sample.instances.push_back(negatives[i]);
    }
    for (std::size_t t : cfg.tmax) {
      const std::string cell = "s" + std::to_string(size) + "_t" + std::to_string(t);
      ResultRow row;
      row.size = size;
      row.tmax = t;
      CellRun run;
      nlohmann::json entry{{"cell", cell}, {"size", size}, {"tmax", t}};

      try {
        if (run_cg) {
          std::ostringstream trace;
          ColgenOptions opt;
          opt.tmax = t;
          opt.time_limit = cfg.time_limit;
          opt.trace = &trace;
          ColgenResult r = run_colgen(sample, *model, opt);
          row.cg_time = r.explanation.seconds;
          row.cg_objective = r.explanation.objective;
          row.cg_certified = r.certified;
          row.cg_status = to_string(r.explanation.status);
          if (r.converged) row.lp_bound = r.lp_lower_bound;
          write_file(cfg.output_dir / ("trace_" + cell + ".jsonl"), trace.str());
          run.colgen = std::move(r.explanation);
        }
        if (run_mip) {
          BaselineConfig bc;
          bc.tmax = t;
          bc.time_limit = cfg.time_limit;
          GroupExplanation g = solve_baseline(sample, *model, bc);
          row.mip_time = g.seconds;
          row.mip_status = to_string(g.status);
          row.mip_certified = g.status == SolveStatus::optimal;
          if (g.status != SolveStatus::no_incumbent) {
            row.mip_objective = g.objective;
            run.baseline = std::move(g);
          }
        }
      } catch (const Error& e) {
        if (e.code() != Errc::infeasible) throw;
        if (run_cg) row.cg_status = "infeasible";
        if (run_mip) row.mip_status = "infeasible";
        nlohmann::json ids = nlohmann::json::array();
        for (std::size_t i : e.ids()) ids.push_back(sample[i].source_id);
        entry["infeasible_instances"] = ids;
      }

      row.gap = cell_gap(row.cg_objective, row.mip_objective);
      const GroupExplanation* best = nullptr;
      if (run.colgen) best = &*run.colgen;
      if (run.baseline && (!best || run.baseline->objective < best->objective)) {
        best = &*run.baseline;
      }
      if (best) {
        row.best = best->objective;
        const Heatmap h = make_heatmap(*best, *schema);
        write_file(cfg.output_dir / ("heatmap_" + cell + ".csv"), heatmap_csv(h));
        write_file(cfg.output_dir / ("heatmap_" + cell + ".svg"), heatmap_svg(h));
        const auto freq = feature_frequencies(*best, *schema);
        write_file(cfg.output_dir / ("feature_freq_" + cell + ".csv"), frequency_csv(freq));
        write_file(cfg.output_dir / ("feature_freq_" + cell + ".svg"), frequency_svg(freq));
      }
      for (auto [name, g] : {std::pair{"colgen", &run.colgen}, std::pair{"baseline", &run.baseline}}) {
        if (!*g) continue;
        entry[name] = result_to_json({schema, model, sample, t, name, **g});
      }
      cells.push_back(std::move(entry));
      rows.push_back(row);
    }
  }
  write_file(cfg.output_dir / "results.csv", results_csv(rows));
  write_file(cfg.output_dir / "timings.csv", timings_csv(rows));
  write_file(cfg.output_dir / "explanations.json", cells.dump(1) + "\n");
  return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "size,tmax,best,gap,cg_objective,mip_objective,lp_bound,cg_status,mip_status,"
         "cg_certified,mip_certified\n";
  for (const auto& r : rows) {
    out << csv::join({std::to_string(r.size), std::to_string(r.tmax), opt_string(r.best),
                      opt_string(r.gap), opt_string(r.cg_objective), opt_string(r.mip_objective),
                      opt_string(r.lp_bound), r.cg_status, r.mip_status,
                      r.cg_certified ? "1" : "0", r.mip_certified ? "1" : "0"})
        << '\n';
  }
  return out.str();
}

std::string timings_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "size,tmax,cg_time,mip_time\n";
  for (const auto& r : rows) {
    out << r.size << ',' << r.tmax << ',' << fixed(r.cg_time) << ',' << fixed(r.mip_time) << '\n';
  }
  return out.str();
}

}  // namespace groupcf
