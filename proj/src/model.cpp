#include "dsx/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "dsx/optimizer.hpp"

namespace dsx {

using json = nlohmann::json;

std::vector<double> Model::predict_proba(const FeatureVector& x) const {
  const std::size_t M = classes.size();
  const std::size_t n = vocab.size();
  std::vector<double> p(M + 1);
  double peak = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    double s = intercepts[k];
    for (auto j : x.indices) {
      if (j >= n) throw ModelError("feature index out of range");
      s += weights[k * n + j];
    }
    p[k] = s;
    peak = std::max(peak, s);
  }
  p[M] = 0.0;  // OTHER
  double total = 0.0;
  for (auto& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

std::map<std::string, double> Model::class_probabilities(const FeatureVector& x) const {
  const auto p = predict_proba(x);
  std::map<std::string, double> out;
  for (std::size_t k = 0; k < classes.size(); ++k) out[classes[k]] = p[k];
  out[std::string(kOtherClass)] = p.back();
  return out;
}

void Model::save(std::ostream& out) const {
  const std::size_t n = vocab.size();
  json w = json::array();
  for (std::size_t k = 0; k < classes.size(); ++k)
    w.push_back(std::vector<double>(weights.begin() + static_cast<std::ptrdiff_t>(k * n),
                                    weights.begin() + static_cast<std::ptrdiff_t>((k + 1) * n)));
  json doc = {
      {"format", kModelFormat},
      {"classes", classes},
      {"reference_class", kOtherClass},
      {"vocabulary", vocab.keys()},
      {"frequent_strings", std::vector<std::string>(frequent.begin(), frequent.end())},
      {"weights", w},
      {"intercepts", intercepts},
      {"train_params",
       {{"r", params.r}, {"C", params.C}, {"tol", params.tol}, {"max_iter", params.max_iter}, {"seed", params.seed}}},
      {"train_stats",
       {{"iterations", stats.iterations},
        {"loss", stats.loss},
        {"grad_norm", stats.grad_norm},
        {"converged", stats.converged}}},
  };
  out << doc.dump(1) << '\n';
}

Model Model::load(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ModelError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kModelFormat)
    throw ModelError("unsupported model format (expected " + std::string(kModelFormat) + ")");
  try {
    Model m;
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    m.vocab = FeatureVocabulary(doc.at("vocabulary").get<std::vector<std::string>>());
    for (auto& s : doc.at("frequent_strings").get<std::vector<std::string>>()) m.frequent.insert(std::move(s));
    const auto& w = doc.at("weights");
    if (w.size() != m.classes.size()) throw ModelError("weight row count does not match classes");
    for (const auto& row : w) {
      auto r = row.get<std::vector<double>>();
      if (r.size() != m.vocab.size()) throw ModelError("weight row length does not match vocabulary");
      m.weights.insert(m.weights.end(), r.begin(), r.end());
    }
    m.intercepts = doc.at("intercepts").get<std::vector<double>>();
    if (m.intercepts.size() != m.classes.size()) throw ModelError("intercept count does not match classes");
    const auto& p = doc.at("train_params");
    m.params.r = p.at("r");
    m.params.C = p.at("C");
    m.params.tol = p.at("tol");
    m.params.max_iter = p.at("max_iter");
    m.params.seed = p.at("seed");
    const auto& s = doc.at("train_stats");
    m.stats.iterations = s.at("iterations");
    m.stats.loss = s.at("loss");
    m.stats.grad_norm = s.at("grad_norm");
    m.stats.converged = s.at("converged");
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

Model train(const TrainingSet& data, const TrainParams& params, Exec exec) {
  if (data.examples.empty()) throw ModelError("degenerate training set: no examples");
  if (!(params.C > 0.0)) throw ModelError("C must be positive");
  std::set<std::string> labels;
  for (const auto& e : data.examples) labels.insert(e.label);
  if (labels.size() < 2) throw ModelError("degenerate training set: only one class present");

  Model model;
  model.params = params;
  model.vocab = data.vocab;
  for (const auto& l : labels)
    if (l != kOtherClass) model.classes.push_back(l);
  const std::size_t M = model.classes.size();
  const std::size_t n = model.vocab.size();

  std::vector<FeatureVector> rows;
  std::vector<std::size_t> y;
  rows.reserve(data.examples.size());
  for (const auto& e : data.examples) {
    rows.push_back(e.features);
    const auto it = std::lower_bound(model.classes.begin(), model.classes.end(), e.label);
    y.push_back(it != model.classes.end() && *it == e.label ? static_cast<std::size_t>(it - model.classes.begin()) : M);
  }

  SoftmaxObjective objective(rows, y, M, n, params.C);
  std::vector<double> theta(objective.dimension(), 0.0);
  const auto result = minimize_lbfgs(
      [&](std::span<const double> x, std::span<double> g) { return objective.evaluate(x, g, exec); }, theta,
      params.tol, params.max_iter);

  model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(M * n));
  model.intercepts.assign(theta.begin() + static_cast<std::ptrdiff_t>(M * n), theta.end());
  model.stats = {result.iterations, result.value, result.grad_norm, result.converged};
  return model;
}

}  // namespace dsx
