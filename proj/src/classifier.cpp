#include "groupcf/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>

#include "groupcf/error.hpp"

namespace groupcf {

namespace {

bool all_finite(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

template <typename T>
std::vector<double> forward(const ReluNetwork& net, std::span<const T> x) {
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const DenseLayer& layer = net.layers[k];
    std::vector<double> next(layer.outputs());
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < current.size(); ++i) acc += layer.weights[o][i] * current[i];
      next[o] = (k + 1 < net.layers.size()) ? std::max(0.0, acc) : acc;
    }
    current = std::move(next);
  }
  return current;
}

template <typename T>
double affine(const LogisticModel& lr, std::span<const T> x) {
  double acc = lr.bias;
  for (std::size_t i = 0; i < x.size(); ++i) acc += lr.weights[i] * static_cast<double>(x[i]);
  return acc;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

ClassifierModel::ClassifierModel(LogisticModel lr, double tau) : model_(std::move(lr)), tau_(tau) {
  validate();
}

ClassifierModel::ClassifierModel(ReluNetwork net, double tau) : model_(std::move(net)), tau_(tau) {
  validate();
}

void ClassifierModel::validate() const {
  if (!(tau_ > 0.0 && tau_ < 1.0)) {
    throw Error(Errc::invalid_model, "tau must lie strictly between 0 and 1");
  }
  if (is_logistic()) {
    const auto& lr = logistic();
    if (lr.weights.empty()) throw Error(Errc::invalid_model, "logistic model has no weights");
    if (!all_finite(lr.weights) || !std::isfinite(lr.bias)) {
      throw Error(Errc::invalid_model, "logistic model has non-finite weights");
    }
    return;
  }
  const auto& net = network();
  if (net.layers.empty()) throw Error(Errc::invalid_model, "network has no layers");
  std::size_t width = net.layers.front().inputs();
  if (width == 0) throw Error(Errc::invalid_model, "network input width is zero");
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const DenseLayer& layer = net.layers[k];
    if (layer.outputs() == 0 || layer.bias.size() != layer.outputs()) {
      throw Error(Errc::invalid_model, "layer " + std::to_string(k) + ": bias length mismatch");
    }
    for (const auto& row : layer.weights) {
      if (row.size() != width) {
        throw Error(Errc::invalid_model,
                    "layer " + std::to_string(k) + ": expected input width " + std::to_string(width));
      }
      if (!all_finite(row)) {
        throw Error(Errc::invalid_model, "layer " + std::to_string(k) + ": non-finite weight");
      }
    }
    if (!all_finite(layer.bias)) {
      throw Error(Errc::invalid_model, "layer " + std::to_string(k) + ": non-finite bias");
    }
    width = layer.outputs();
  }
  if (width != 1) throw Error(Errc::invalid_model, "network must end in a single logit");
}

double ClassifierModel::threshold_logit() const { return std::log(tau_ / (1.0 - tau_)); }

std::size_t ClassifierModel::input_width() const {
  return is_logistic() ? logistic().weights.size() : network().layers.front().inputs();
}

double ClassifierModel::logit(std::span<const double> x) const {
  if (x.size() != input_width()) {
    throw Error(Errc::dimension_mismatch, "input has " + std::to_string(x.size()) +
                                              " columns, model expects " +
                                              std::to_string(input_width()));
  }
  return is_logistic() ? affine(logistic(), x) : forward(network(), x).front();
}

double ClassifierModel::logit(std::span<const std::uint8_t> x) const {
  if (x.size() != input_width()) {
    throw Error(Errc::dimension_mismatch, "input has " + std::to_string(x.size()) +
                                              " columns, model expects " +
                                              std::to_string(input_width()));
  }
  return is_logistic() ? affine(logistic(), x) : forward(network(), x).front();
}

double ClassifierModel::predict_proba(std::span<const std::uint8_t> x) const {
  return sigmoid(logit(x));
}

std::vector<std::vector<Interval>> ClassifierModel::hidden_bounds() const {
  std::vector<std::vector<Interval>> out;
  if (is_logistic()) return out;
  const auto& layers = network().layers;
  std::vector<Interval> box(layers.front().inputs(), Interval{0.0, 1.0});
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const DenseLayer& layer = layers[k];
    std::vector<Interval> pre(layer.outputs());
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      double lo = layer.bias[o];
      double hi = layer.bias[o];
      for (std::size_t i = 0; i < box.size(); ++i) {
        const double w = layer.weights[o][i];
        lo += w >= 0 ? w * box[i].lower : w * box[i].upper;
        hi += w >= 0 ? w * box[i].upper : w * box[i].lower;
      }
      if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(Errc::unbounded_activation, "activation bound of layer " + std::to_string(k) +
                                                    " unit " + std::to_string(o) +
                                                    " overflows");
      }
      pre[o] = {lo, hi};
    }
    box.resize(pre.size());
    for (std::size_t o = 0; o < pre.size(); ++o) {
      box[o] = {std::max(0.0, pre[o].lower), std::max(0.0, pre[o].upper)};
    }
    out.push_back(std::move(pre));
  }
  return out;
}

Interval ClassifierModel::logit_bounds() const {
  std::vector<Interval> box;
  std::vector<double> w;
  double bias = 0.0;
  if (is_logistic()) {
    box.assign(logistic().weights.size(), Interval{0.0, 1.0});
    w = logistic().weights;
    bias = logistic().bias;
  } else {
    const auto hidden = hidden_bounds();
    const auto& layers = network().layers;
    if (hidden.empty()) {
      box.assign(layers.front().inputs(), Interval{0.0, 1.0});
    } else {
      for (const Interval& p : hidden.back()) {
        box.push_back({std::max(0.0, p.lower), std::max(0.0, p.upper)});
      }
    }
    w = layers.back().weights.front();
    bias = layers.back().bias.front();
  }
  Interval out{bias, bias};
  for (std::size_t i = 0; i < box.size(); ++i) {
    out.lower += w[i] >= 0 ? w[i] * box[i].lower : w[i] * box[i].upper;
    out.upper += w[i] >= 0 ? w[i] * box[i].upper : w[i] * box[i].lower;
  }
  if (!std::isfinite(out.lower) || !std::isfinite(out.upper)) {
    throw Error(Errc::unbounded_activation, "output logit bound overflows");
  }
  return out;
}

ConstraintFragment embed(const ClassifierModel& model, MipModel& mip,
                         std::span<const VarId> inputs, const std::string& prefix) {
  if (inputs.size() != model.input_width()) {
    throw Error(Errc::dimension_mismatch, "embedding " + std::to_string(inputs.size()) +
                                              " inputs into a model of width " +
                                              std::to_string(model.input_width()));
  }
  ConstraintFragment fragment;
  const double threshold = model.threshold_logit();

  if (model.is_logistic()) {
    const auto& lr = model.logistic();
    LinearExpr score;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (lr.weights[i] != 0.0) score.add(inputs[i], lr.weights[i]);
    }
    score.add_constant(lr.bias);
    fragment.threshold_row = mip.add_constraint(score, Sense::ge, threshold, prefix + "_threshold");
    fragment.rows.push_back(fragment.threshold_row);
    return fragment;
  }

  const auto& layers = model.network().layers;
  const auto bounds = model.hidden_bounds();

  // Each unit's output as an affine expression in MIP variables; stable
  // units are folded into their input expression.
  std::vector<LinearExpr> current(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) current[i].add(inputs[i], 1.0);

  auto combine = [](const DenseLayer& layer, std::size_t o, const std::vector<LinearExpr>& in) {
    LinearExpr out;
    out.add_constant(layer.bias[o]);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double w = layer.weights[o][i];
      if (w == 0.0) continue;
      for (const Term& t : in[i].terms) out.add(t.var, w * t.coef);
      out.add_constant(w * in[i].constant);
    }
    return out;
  };

  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const DenseLayer& layer = layers[k];
    std::vector<LinearExpr> next(layer.outputs());
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      const Interval range = bounds[k][o];
      LinearExpr pre = combine(layer, o, current);
      if (range.upper <= 0.0) continue;  // always inactive: output 0
      if (range.lower >= 0.0) {
        next[o] = std::move(pre);
        continue;
      }
      const std::string name = prefix + "_l" + std::to_string(k) + "_u" + std::to_string(o);
      const VarId a = mip.add_continuous(name + "_a", 0.0, range.upper);
      const VarId s = mip.add_binary(name + "_s");
      fragment.activations.push_back(a);
      fragment.indicators.push_back(s);
      mip.add_to_group(prefix + "_a", a);
      mip.add_to_group(prefix + "_s", s);

      // a >= p
      LinearExpr lower = pre;
      for (Term& t : lower.terms) t.coef = -t.coef;
      lower.constant = -lower.constant;
      lower.add(a, 1.0);
      fragment.rows.push_back(mip.add_constraint(lower, Sense::ge, 0.0, name + "_ge"));
      // a <= p + M-(1 - s), M- = -lower bound
      const double m_minus = -range.lower;
      LinearExpr upper = lower;
      upper.add(s, m_minus);
      fragment.rows.push_back(mip.add_constraint(upper, Sense::le, m_minus, name + "_off"));
      // a <= M+ s
      LinearExpr gate;
      gate.add(a, 1.0).add(s, -range.upper);
      fragment.rows.push_back(mip.add_constraint(gate, Sense::le, 0.0, name + "_on"));

      next[o].add(a, 1.0);
    }
    current = std::move(next);
  }

  const LinearExpr logit = combine(layers.back(), 0, current);
  fragment.threshold_row = mip.add_constraint(logit, Sense::ge, threshold, prefix + "_threshold");
  fragment.rows.push_back(fragment.threshold_row);
  return fragment;
}

ClassifierModel train_lr(const InstanceSet& data, double C, double tau) {
  const std::size_t n = data.instances.size();
  if (data.labels.size() != n || n == 0) {
    throw Error(Errc::single_class_data, "training data carries no labels");
  }
  const bool has_pos = std::count(data.labels.begin(), data.labels.end(), 1) > 0;
  const bool has_neg = std::count(data.labels.begin(), data.labels.end(), 0) > 0;
  if (!has_pos || !has_neg) {
    throw Error(Errc::single_class_data, "training data contains a single class");
  }
  if (!(C > 0.0)) throw Error(Errc::invalid_config, "regularization C must be positive");

  const std::size_t d = data.instances.front().values.size();
  // Design matrix with a trailing intercept column.
  Eigen::MatrixXd X(n, d + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X(i, j) = data.instances[i].values[j];
    X(i, d) = 1.0;
    y(i) = data.labels[i] == 1 ? 1.0 : 0.0;
  }

  // Objective: 0.5 |w|^2 + C * sum logloss; the intercept is not penalised.
  Eigen::VectorXd reg = Eigen::VectorXd::Ones(d + 1);
  reg(d) = 1e-10;
  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd z = X * beta;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double zi = z(i);
      // log(1 + exp(zi)) - y zi, computed stably
      loss += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - y(i) * zi;
    }
    return 0.5 * beta.cwiseProduct(reg).dot(beta) + C * loss;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  double f = objective(beta);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd z = X * beta;
    Eigen::VectorXd p(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = reg.cwiseProduct(beta) + C * X.transpose() * (p - y);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
    Eigen::MatrixXd H = C * X.transpose() * w.asDiagonal() * X;
    H.diagonal() += reg;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    double t = 1.0;
    Eigen::VectorXd candidate = beta - step;
    double fc = objective(candidate);
    while (fc > f - 1e-4 * t * grad.dot(step) && t > 1e-12) {
      t *= 0.5;
      candidate = beta - t * step;
      fc = objective(candidate);
    }
    if (!(fc < f)) break;
    const double progress = f - fc;
    beta = candidate;
    f = fc;
    if (progress < 1e-14 * std::max(1.0, std::abs(f))) break;
  }

  LogisticModel lr;
  lr.weights.assign(beta.data(), beta.data() + d);
  lr.bias = beta(d);
  return ClassifierModel(std::move(lr), tau);
}

nlohmann::json model_to_json(const ClassifierModel& model) {
  nlohmann::json doc;
  doc["tau"] = model.tau();
  if (model.is_logistic()) {
    doc["variant"] = "lr";
    doc["weights"] = model.logistic().weights;
    doc["bias"] = model.logistic().bias;
    return doc;
  }
  doc["variant"] = "relu";
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : model.network().layers) {
    layers.push_back({{"W", layer.weights}, {"b", layer.bias}});
  }
  doc["layers"] = std::move(layers);
  return doc;
}

ClassifierModel model_from_json(const nlohmann::json& doc) {
  try {
    const std::string variant = doc.at("variant").get<std::string>();
    const double tau = doc.value("tau", 0.5);
    if (variant == "lr") {
      LogisticModel lr;
      lr.weights = doc.at("weights").get<std::vector<double>>();
      lr.bias = doc.value("bias", 0.0);
      return ClassifierModel(std::move(lr), tau);
    }
    if (variant == "relu") {
      ReluNetwork net;
      for (const auto& layer : doc.at("layers")) {
        net.layers.push_back({layer.at("W").get<std::vector<std::vector<double>>>(),
                              layer.at("b").get<std::vector<double>>()});
      }
      return ClassifierModel(std::move(net), tau);
    }
    throw Error(Errc::invalid_model, "unknown model variant '" + variant + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_model, std::string("malformed model file: ") + e.what());
  }
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error(Errc::io_failure, "failed writing " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_model, path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace groupcf
