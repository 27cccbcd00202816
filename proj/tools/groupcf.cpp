#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "groupcf/baseline.hpp"
#include "groupcf/classifier.hpp"
#include "groupcf/colgen.hpp"
#include "groupcf/error.hpp"
#include "groupcf/experiment.hpp"
#include "groupcf/report.hpp"
#include "groupcf/validate.hpp"

using namespace groupcf;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInfeasible = 2, kConfig = 3, kNoIncumbent = 4 };

int exit_code(const Error& e) {
  switch (e.code()) {
    case Errc::infeasible:
      return kInfeasible;
    case Errc::numerical_breakdown:
      return kFailure;
    default:
      return kConfig;
  }
}

struct ExplainArgs {
  std::string schema, data, model, id_column, label_column, method = "colgen", out, trace;
  std::size_t tmax = 1;
  double time_limit = 3600.0;
  bool only_negative = false;
};

int run_cmd(const std::string& config) {
  const ExperimentConfig cfg = load_config(config);
  const auto rows = run_experiment(cfg);
  std::cout << results_csv(rows);
  bool infeasible = false, missing = false;
  for (const auto& r : rows) {
    if (r.cg_status == "infeasible" || r.mip_status == "infeasible") {
      infeasible = true;
    } else if (!r.best) {
      missing = true;
    }
  }
  std::cerr << "wrote " << rows.size() << " rows to " << (cfg.output_dir / "results.csv").string()
            << "\n";
  if (infeasible) return kInfeasible;
  return missing ? kNoIncumbent : kOk;
}

int explain_cmd(const ExplainArgs& a) {
  auto schema = std::make_shared<const FeatureSchema>(load_schema(a.schema));
  auto model = std::make_shared<const ClassifierModel>(load_model(a.model));
  CsvLoadConfig load;
  load.id_column = a.id_column;
  load.label_column = a.label_column;
  InstanceSet set = load_csv(a.data, schema, load);
  if (a.only_negative) {
    set = negative_instances(set, *model);
    if (set.size() == 0) {
      throw Error(Errc::no_negative_instances, "the model classifies no row negative");
    }
  }

  GroupExplanation g;
  if (a.method == "colgen") {
    std::ofstream trace;
    ColgenOptions opt;
    opt.tmax = a.tmax;
    opt.time_limit = a.time_limit;
    if (!a.trace.empty()) {
      trace.open(a.trace);
      if (!trace) throw Error(Errc::io_failure, "cannot write " + a.trace);
      opt.trace = &trace;
    }
    ColgenResult r = run_colgen(set, *model, opt);
    std::cerr << "lp bound " << r.lp_lower_bound << ", iterations " << r.iterations
              << (r.certified ? ", certified" : ", not certified") << "\n";
    g = std::move(r.explanation);
  } else if (a.method == "baseline") {
    BaselineConfig bc;
    bc.tmax = a.tmax;
    bc.time_limit = a.time_limit;
    g = solve_baseline(set, *model, bc);
  } else {
    throw Error(Errc::invalid_config, "method must be colgen or baseline");
  }
  if (g.status == SolveStatus::no_incumbent) {
    std::cerr << "no incumbent (" << g.limit_reason << " limit)\n";
    return kNoIncumbent;
  }

  const Heatmap h = make_heatmap(g, *schema);
  std::cout << g.objective << " explanation(s), status " << to_string(g.status) << "\n"
            << heatmap_csv(h);
  if (!a.out.empty()) {
    write_file(a.out, result_to_json({schema, model, set, a.tmax, a.method, g}).dump(1) + "\n");
  }
  return kOk;
}

// Accepts a single result document or the explanations.json of a run.
int validate_cmd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, path + ": " + e.what());
  }
  std::vector<std::pair<std::string, nlohmann::json>> docs;
  if (doc.is_array()) {
    for (const auto& cell : doc) {
      for (const char* m : {"colgen", "baseline"}) {
        if (cell.contains(m)) docs.emplace_back(cell.value("cell", "?") + "/" + m, cell[m]);
      }
    }
  } else {
    docs.emplace_back(path, doc);
  }
  std::size_t bad = 0;
  for (const auto& [name, d] : docs) {
    const ResultDocument r = result_from_json(d);
    const ValidationReport report = validate_explanation(r.instances, *r.model, r.explanation, r.tmax);
    std::cout << name << ": " << (report.ok() ? "ok" : "INVALID") << " (" << report.columns_checked
              << " columns, " << report.instances_checked << " instances)\n";
    for (const auto& v : report.violations) std::cout << "  " << v.kind << ": " << v.detail << "\n";
    if (!report.ok()) ++bad;
  }
  return bad == 0 ? kOk : kFailure;
}

int train_cmd(const std::string& schema_path, const std::string& data, const std::string& label,
              const std::string& out, double C) {
  auto schema = std::make_shared<const FeatureSchema>(load_schema(schema_path));
  CsvLoadConfig load;
  load.label_column = label;
  const InstanceSet set = load_csv(data, schema, load);
  const ClassifierModel model = train_lr(set, C);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    correct += (model.is_positive(set[i].values) ? 1 : 0) == set.labels[i];
  }
  save_model(model, out);
  std::cerr << "training accuracy " << static_cast<double>(correct) / set.size() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum sets of shared counterfactual explanations"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
  run->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "Explain every row of a CSV");
  explain->add_option("--schema", ex.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  explain->add_option("--data", ex.data, "Instances CSV")->required()->check(CLI::ExistingFile);
  explain->add_option("--model", ex.model, "Model JSON")->required()->check(CLI::ExistingFile);
  explain->add_option("--tmax", ex.tmax, "Changed features per explanation")->required();
  explain->add_option("--method", ex.method, "colgen or baseline")
      ->check(CLI::IsMember({"colgen", "baseline"}));
  explain->add_option("--time-limit", ex.time_limit, "Seconds");
  explain->add_option("--id-column", ex.id_column, "Column holding row ids");
  explain->add_option("--label-column", ex.label_column, "Label column to skip");
  explain->add_flag("--negatives", ex.only_negative, "Drop rows the model classifies positive");
  explain->add_option("--out", ex.out, "Result JSON");
  explain->add_option("--trace", ex.trace, "Column generation trace (JSON lines)");

  std::string result;
  auto* validate = app.add_subcommand("validate", "Check a result document");
  validate->add_option("result", result, "Result JSON")->required()->check(CLI::ExistingFile);

  std::string t_schema, t_data, t_label = "label", t_out;
  double C = 10.0;
  auto* train = app.add_subcommand("train", "Fit a logistic regression model");
  train->add_option("--schema", t_schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--data", t_data, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--label", t_label, "0/1 label column");
  train->add_option("--out", t_out, "Model JSON")->required();
  train->add_option("--C", C, "Inverse L2 strength");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return run_cmd(config);
    if (*explain) return explain_cmd(ex);
    if (*validate) return validate_cmd(result);
    if (*train) return train_cmd(t_schema, t_data, t_label, t_out, C);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!e.ids().empty()) {
      std::cerr << "instances:";
      for (std::size_t i : e.ids()) std::cerr << ' ' << i;
      std::cerr << "\n";
    }
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
