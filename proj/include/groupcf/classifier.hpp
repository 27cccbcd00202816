#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "groupcf/schema.hpp"
#include "groupcf/solver.hpp"

namespace groupcf {

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
};

// Affine layer, weights stored row-major as [output][input].
struct DenseLayer {
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;

  std::size_t inputs() const { return weights.empty() ? 0 : weights.front().size(); }
  std::size_t outputs() const { return weights.size(); }
};

// ReLU after every layer but the last, which yields a single logit.
struct ReluNetwork {
  std::vector<DenseLayer> layers;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Pre-trained binary classifier with decision threshold tau: an input is
// positive iff predict_proba >= tau, equivalently logit >= log(tau/(1-tau)).
class ClassifierModel {
 public:
  ClassifierModel(LogisticModel lr, double tau = 0.5);
  ClassifierModel(ReluNetwork net, double tau = 0.5);

  bool is_logistic() const { return std::holds_alternative<LogisticModel>(model_); }
  const LogisticModel& logistic() const { return std::get<LogisticModel>(model_); }
  const ReluNetwork& network() const { return std::get<ReluNetwork>(model_); }

  double tau() const { return tau_; }
  double threshold_logit() const;
  std::size_t input_width() const;

  double logit(std::span<const double> x) const;
  double logit(std::span<const std::uint8_t> x) const;
  double predict_proba(std::span<const std::uint8_t> x) const;
  bool is_positive(std::span<const std::uint8_t> x) const { return logit(x) >= threshold_logit(); }

  // Pre-activation bounds of every hidden unit over the input box [0,1]^n,
  // by interval arithmetic. One vector per hidden layer.
  std::vector<std::vector<Interval>> hidden_bounds() const;
  // Bounds on the output logit over the same box.
  Interval logit_bounds() const;

 private:
  void validate() const;

  std::variant<LogisticModel, ReluNetwork> model_;
  double tau_ = 0.5;
};

// Variables and rows added to a MipModel by embed().
struct ConstraintFragment {
  std::vector<VarId> activations;  // post-ReLU values, continuous
  std::vector<VarId> indicators;   // on/off binaries of unstable units
  std::vector<RowId> rows;
  RowId threshold_row;
};

// Adds constraints forcing the classifier to label `inputs` positive.
// Hidden units whose interval bounds prove them always active or always
// inactive are encoded without an indicator; the remaining ones use the
// big-M form a >= p, a <= p + M-(1-s), a <= M+ s, s binary.
ConstraintFragment embed(const ClassifierModel& model, MipModel& mip,
                         std::span<const VarId> inputs, const std::string& prefix = "clf");

// L2-regularised logistic regression (C weights the data term, as in
// liblinear), fitted by Newton's method. Deterministic.
ClassifierModel train_lr(const InstanceSet& data, double C = 10.0, double tau = 0.5);

nlohmann::json model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const nlohmann::json& doc);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace groupcf
