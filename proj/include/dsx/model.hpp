#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dsx/annotate.hpp"
#include "dsx/dom.hpp"
#include "dsx/features.hpp"
#include "dsx/parallel.hpp"
#include "dsx/topic.hpp"

namespace dsx {

/// Reference class of the softmax: "no relation at this node".
inline constexpr std::string_view kOtherClass = "OTHER";
inline constexpr std::string_view kModelFormat = "dsx-model/1";

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledExample {
  std::string page_id;
  XPath xpath;
  std::string label;  // predicate, "name", or OTHER
  FeatureVector features;
};

struct TrainParams {
  int r = 3;            // negatives per positive
  double C = 1.0;       // inverse L2 strength
  double tol = 1e-6;    // gradient-norm stop
  int max_iter = 500;
  std::uint64_t seed = 1;
};

struct TrainingSet {
  FeatureVocabulary vocab;  // sorted keys, frozen
  std::vector<LabeledExample> examples;
};

/// Positives from the annotations (plus a "name" positive at each topic
/// anchor the annotations lack) and r seeded negatives per positive drawn
/// from each page's remaining text nodes. Nodes that differ from a group of
/// same-predicate positives only at the indices where that group varies are
/// never drawn.
TrainingSet assemble_training_set(std::span<const Annotation> annotations, std::span<const Page> pages,
                                  const TopicMap& topics, const FrequentStrings& freq,
                                  const TrainParams& params, Exec exec = Exec::Parallel);

/// Nodes a page's positives protect from negative sampling (sorted).
std::vector<std::size_t> list_sibling_exclusions(const Page& page, std::span<const std::size_t> positives,
                                                 std::span<const std::string> predicates);

struct TrainStats {
  int iterations = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Multinomial logistic regression with OTHER as the zero-weight reference.
class Model {
 public:
  std::vector<std::string> classes;  // sorted, OTHER excluded
  FeatureVocabulary vocab;
  FrequentStrings frequent;
  std::vector<double> weights;     // classes x vocab, row-major
  std::vector<double> intercepts;  // per class
  TrainParams params;
  TrainStats stats;

  std::size_t num_classes() const { return classes.size(); }
  std::size_t num_features() const { return vocab.size(); }

  /// Probabilities for each class followed by OTHER; sums to 1.
  std::vector<double> predict_proba(const FeatureVector& x) const;
  std::map<std::string, double> class_probabilities(const FeatureVector& x) const;

  void save(std::ostream& out) const;
  static Model load(std::istream& in);
};

/// Fits by L-BFGS from zero weights, minimizing summed cross-entropy plus
/// ||W||^2 / (2C) with intercepts unpenalized.
Model train(const TrainingSet& data, const TrainParams& params, Exec exec = Exec::Parallel);

}  // namespace dsx
