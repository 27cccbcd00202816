// Writes the synthetic COMPAS-shaped dataset, its schema, a trained logistic
// model, a small ReLU network and two experiment configs.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "groupcf/classifier.hpp"
#include "groupcf/report.hpp"
#include "groupcf/schema.hpp"

using namespace groupcf;

namespace {

FeatureSchema compas_schema() {
  return build_schema({{"sex", FeatureKind::binary, {}, {}},
                       {"age", FeatureKind::numeric, {}, {25, 45}},
                       {"race", FeatureKind::categorical, {"african_american", "caucasian", "hispanic", "other"}, {}},
                       {"priors", FeatureKind::numeric, {}, {0, 3, 10}},
                       {"charge", FeatureKind::categorical, {"felony", "misdemeanor", "other"}, {}}});
}

double quarter(std::mt19937_64& rng, int span) {
  return static_cast<double>(static_cast<int>(rng() % (2 * span + 1)) - span) / 4.0;
}

ReluNetwork random_network(std::mt19937_64& rng, std::size_t inputs,
                           const std::vector<std::size_t>& hidden) {
  ReluNetwork net;
  std::size_t in = inputs;
  for (std::size_t width : hidden) {
    DenseLayer layer;
    layer.weights.assign(width, std::vector<double>(in));
    layer.bias.assign(width, 0.0);
    for (auto& row : layer.weights) {
      for (double& w : row) w = quarter(rng, 4);
    }
    for (double& b : layer.bias) b = quarter(rng, 2);
    net.layers.push_back(std::move(layer));
    in = width;
  }
  DenseLayer out;
  out.weights.assign(1, std::vector<double>(in));
  for (double& w : out.weights[0]) w = quarter(rng, 4);
  out.bias = {0.0};
  net.layers.push_back(std::move(out));
  return net;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic fixtures"};
  std::string dir = "fixtures/compas_like";
  std::size_t rows = 1000;
  std::uint64_t seed = 7;
  app.add_option("--out", dir, "Output directory");
  app.add_option("--rows", rows, "Rows to generate");
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);

  const auto root = std::filesystem::path(dir);
  std::filesystem::create_directories(root);
  auto schema = std::make_shared<const FeatureSchema>(compas_schema());
  write_file(root / "schema.json", schema_to_json(*schema).dump(2) + "\n");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::ostringstream csv;
  csv << "id,sex,age,race,priors,charge,label\n";
  const char* races[] = {"african_american", "caucasian", "hispanic", "other"};
  const char* charges[] = {"felony", "misdemeanor", "other"};
  for (std::size_t r = 0; r < rows; ++r) {
    const int sex = rng() % 5 < 4 ? 1 : 0;
    const int age = 18 + static_cast<int>(rng() % 53);
    const int race = static_cast<int>(rng() % 10 < 5 ? 0 : rng() % 4);
    const int priors = static_cast<int>(std::min<double>(30, std::floor(std::abs(noise(rng)) * 5)));
    const int charge = static_cast<int>(rng() % 3);
    // Positive class: low predicted recidivism.
    const double score = 1.2 - 0.04 * (45 - std::min(age, 45)) - 0.25 * priors +
                         (charge == 1 ? 0.5 : 0.0) - 0.3 * sex + 0.8 * noise(rng);
    csv << "r" << r << ',' << sex << ',' << age << ',' << races[race] << ',' << priors << ','
        << charges[charge] << ',' << (score > 0 ? 1 : 0) << '\n';
  }
  write_file(root / "data.csv", csv.str());

  CsvLoadConfig load;
  load.id_column = "id";
  load.label_column = "label";
  const InstanceSet data = load_csv(root / "data.csv", schema, load);
  save_model(train_lr(data, 10.0), root / "model_lr.json");

  // Network output bias centred on the median logit, offset off the grid.
  ClassifierModel raw(random_network(rng, schema->expanded_size(), {10, 10}));
  std::vector<double> logits;
  for (const auto& inst : data.instances) logits.push_back(raw.logit(inst.values));
  std::nth_element(logits.begin(), logits.begin() + logits.size() / 2, logits.end());
  ReluNetwork net = raw.network();
  net.layers.back().bias[0] = -logits[logits.size() / 2] + 1.0 / 128;
  save_model(ClassifierModel(net), root / "model_nn.json");

  for (const char* kind : {"lr", "nn"}) {
    const nlohmann::json cfg{{"schema", "schema.json"},
                             {"data", "data.csv"},
                             {"model", std::string("model_") + kind + ".json"},
                             {"id_column", "id"},
                             {"label_column", "label"},
                             {"method", "both"},
                             {"sizes", {10, 20}},
                             {"tmax", {2, 3}},
                             {"time_limit", 120},
                             {"seed", 1},
                             {"output_dir", std::string("results_") + kind}};
    write_file(root / (std::string("config_") + kind + ".json"), cfg.dump(2) + "\n");
  }
  std::cout << "wrote " << rows << " rows to " << root.string() << "\n";
  return 0;
}
