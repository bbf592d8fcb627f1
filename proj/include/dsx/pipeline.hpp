#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsx/annotate.hpp"
#include "dsx/extract.hpp"
#include "dsx/kb.hpp"
#include "dsx/metrics.hpp"
#include "dsx/model.hpp"
#include "dsx/topic.hpp"

namespace dsx {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PipelineConfig {
  std::filesystem::path kb_entities;
  std::filesystem::path kb_triples;
  std::filesystem::path pages_dir;
  std::filesystem::path output_dir;
  std::filesystem::path gold_dir;   // optional: triples/annotations/topics.jsonl
  std::filesystem::path countries;  // optional: one country name per line

  int uniqueness_max = 5;
  int min_annotations = 3;
  double triple_fraction = 0.0001;
  std::size_t stop_min_count = 10;
  double duplicate_page_fraction = 0.5;
  int r = 3;
  double C = 1.0;
  double tol = 1e-6;
  int max_iter = 500;
  double threshold = 0.5;
  double sim_threshold = 0.6;
  double freq_string_fraction = 0.1;
  bool fuzzy = false;
  std::uint64_t seed = 1;
  AnnotationMode mode = AnnotationMode::Full;
  ExtractMode extract_mode = ExtractMode::All;
  bool admitted_clusters_only = false;  // extract only from clusters that produced annotations

  nlohmann::json to_json() const;
  /// Overlays the keys present in `j`; unknown keys and bad values throw ConfigError.
  /// Relative paths in `j` resolve against `base`.
  void merge_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  void validate() const;

  TrainParams train_params() const;
  MatchMode match_mode() const { return fuzzy ? MatchMode::Fuzzy : MatchMode::Exact; }
};

/// Everything the in-memory pipeline produces.
struct StageOutputs {
  std::vector<std::vector<std::size_t>> clusters;  // positions into the page list
  TopicMap topics;
  AnnotationResult annotation;
  std::optional<Model> model;
  std::vector<std::size_t> extract_pages;                // positions extraction ran on
  std::vector<std::vector<NodePrediction>> predictions;  // aligned with extract_pages
  std::vector<ExtractedTriple> extractions;
  std::vector<std::string> warnings;
};

StopValues make_stop_values(const KnowledgeBase& kb, const PipelineConfig& cfg);

/// Topics per template cluster.
TopicMap stage_topics(std::span<const Page> pages, const std::vector<std::vector<std::size_t>>& clusters,
                      const KnowledgeBase& kb, const StopValues& stop, const PipelineConfig& cfg, Exec exec);

/// Annotations per template cluster, merged and sorted.
AnnotationResult stage_annotate(std::span<const Page> pages, const std::vector<std::vector<std::size_t>>& clusters,
                                const TopicMap& topics, const KnowledgeBase& kb, const PipelineConfig& cfg,
                                Exec exec);

/// Frequent strings, training set, and fit; the model carries its frequent strings.
Model stage_train(std::span<const Page> pages, std::span<const Annotation> annotations, const TopicMap& topics,
                  const PipelineConfig& cfg, Exec exec);

StageOutputs run_stages(const KnowledgeBase& kb, std::span<const Page> pages, const PipelineConfig& cfg,
                        Exec exec = Exec::Parallel);

/// Extractions at `threshold` from precomputed predictions.
std::vector<ExtractedTriple> select_all(const Model& model, std::span<const Page> pages, const StageOutputs& out,
                                        double threshold, ExtractMode mode);

/// Loads inputs, runs all stages, writes annotations.jsonl, topics.jsonl,
/// clusters.jsonl, model.json, extractions.jsonl and report.json into the
/// output directory. Inputs are validated before anything is written.
/// Returns the report.
nlohmann::json run_pipeline(const PipelineConfig& cfg, Exec exec = Exec::Parallel);

struct SweepRow {
  double threshold = 0.0;
  std::size_t count = 0;
  std::optional<Metrics> metrics;
};

/// One row per threshold from a single trained model.
std::vector<SweepRow> sweep_thresholds(const Model& model, std::span<const Page> pages, const StageOutputs& out,
                                       std::span<const double> thresholds, ExtractMode mode,
                                       const std::vector<ExtractedTriple>* gold);

std::vector<SweepRow> sweep_threshold(const PipelineConfig& cfg, std::span<const double> thresholds,
                                      Exec exec = Exec::Parallel);

}  // namespace dsx
