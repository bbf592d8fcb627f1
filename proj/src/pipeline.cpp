#include "dsx/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dsx/records.hpp"

namespace dsx {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const char* mode_name(AnnotationMode m) { return m == AnnotationMode::Full ? "full" : "topic-only"; }
const char* mode_name(ExtractMode m) { return m == ExtractMode::All ? "all" : "page-hit"; }

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::vector<Page> subset(std::span<const Page> pages, const std::vector<std::size_t>& positions) {
  std::vector<Page> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(pages[p]);
  return out;
}

std::ifstream open_input(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(what) + " not found: " + path.string());
  return in;
}

}  // namespace

json PipelineConfig::to_json() const {
  return {{"kb_entities", kb_entities.string()},
          {"kb_triples", kb_triples.string()},
          {"pages", pages_dir.string()},
          {"output", output_dir.string()},
          {"gold", gold_dir.string()},
          {"countries", countries.string()},
          {"uniqueness_max", uniqueness_max},
          {"min_annotations", min_annotations},
          {"triple_fraction", triple_fraction},
          {"stop_min_count", stop_min_count},
          {"duplicate_page_fraction", duplicate_page_fraction},
          {"r", r},
          {"C", C},
          {"tol", tol},
          {"max_iter", max_iter},
          {"threshold", threshold},
          {"sim_threshold", sim_threshold},
          {"freq_string_fraction", freq_string_fraction},
          {"fuzzy", fuzzy},
          {"seed", seed},
          {"mode", mode_name(mode)},
          {"extract_mode", mode_name(extract_mode)},
          {"admitted_clusters_only", admitted_clusters_only}};
}

void PipelineConfig::merge_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto path_of = [&](const json& v, const std::string& key) {
    fs::path p = get_as<std::string>(v, key);
    if (!p.empty() && p.is_relative() && !base.empty()) p = base / p;
    return p;
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "kb_entities") kb_entities = path_of(v, key);
    else if (key == "kb_triples") kb_triples = path_of(v, key);
    else if (key == "pages") pages_dir = path_of(v, key);
    else if (key == "output") output_dir = path_of(v, key);
    else if (key == "gold") gold_dir = path_of(v, key);
    else if (key == "countries") countries = path_of(v, key);
    else if (key == "uniqueness_max") uniqueness_max = get_as<int>(v, key);
    else if (key == "min_annotations") min_annotations = get_as<int>(v, key);
    else if (key == "triple_fraction") triple_fraction = get_as<double>(v, key);
    else if (key == "stop_min_count") stop_min_count = get_as<std::size_t>(v, key);
    else if (key == "duplicate_page_fraction") duplicate_page_fraction = get_as<double>(v, key);
    else if (key == "r") r = get_as<int>(v, key);
    else if (key == "C") C = get_as<double>(v, key);
    else if (key == "tol") tol = get_as<double>(v, key);
    else if (key == "max_iter") max_iter = get_as<int>(v, key);
    else if (key == "threshold") threshold = get_as<double>(v, key);
    else if (key == "sim_threshold") sim_threshold = get_as<double>(v, key);
    else if (key == "freq_string_fraction") freq_string_fraction = get_as<double>(v, key);
    else if (key == "fuzzy") fuzzy = get_as<bool>(v, key);
    else if (key == "seed") seed = get_as<std::uint64_t>(v, key);
    else if (key == "admitted_clusters_only") admitted_clusters_only = get_as<bool>(v, key);
    else if (key == "mode") {
      const auto s = get_as<std::string>(v, key);
      if (s == "full") mode = AnnotationMode::Full;
      else if (s == "topic-only") mode = AnnotationMode::TopicOnly;
      else throw ConfigError("mode must be 'full' or 'topic-only'");
    } else if (key == "extract_mode") {
      const auto s = get_as<std::string>(v, key);
      if (s == "all") extract_mode = ExtractMode::All;
      else if (s == "page-hit") extract_mode = ExtractMode::PageHit;
      else throw ConfigError("extract_mode must be 'all' or 'page-hit'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(uniqueness_max >= 1, "uniqueness_max must be at least 1");
  check(min_annotations >= 0, "min_annotations must be nonnegative");
  check(triple_fraction > 0.0 && triple_fraction <= 1.0, "triple_fraction must lie in (0, 1]");
  check(duplicate_page_fraction >= 0.0 && duplicate_page_fraction <= 1.0, "duplicate_page_fraction must lie in [0, 1]");
  check(r >= 0, "r must be nonnegative");
  check(C > 0.0, "C must be positive");
  check(tol > 0.0, "tol must be positive");
  check(max_iter >= 1, "max_iter must be at least 1");
  check(threshold >= 0.0 && threshold <= 1.0, "threshold must lie in [0, 1]");
  check(sim_threshold >= 0.0 && sim_threshold <= 1.0, "sim_threshold must lie in [0, 1]");
  check(freq_string_fraction > 0.0 && freq_string_fraction <= 1.0, "freq_string_fraction must lie in (0, 1]");
}

TrainParams PipelineConfig::train_params() const { return TrainParams{r, C, tol, max_iter, seed}; }

StopValues make_stop_values(const KnowledgeBase& kb, const PipelineConfig& cfg) {
  StopOptions opts;
  opts.min_count = cfg.stop_min_count;
  if (!cfg.countries.empty()) {
    auto in = open_input(cfg.countries, "country list");
    opts.countries = read_country_list(in);
  }
  return build_stop_values(kb, cfg.triple_fraction, opts);
}

TopicMap stage_topics(std::span<const Page> pages, const std::vector<std::vector<std::size_t>>& clusters,
                      const KnowledgeBase& kb, const StopValues& stop, const PipelineConfig& cfg, Exec exec) {
  TopicMap all;
  for (const auto& cluster : clusters) {
    const auto sub = subset(pages, cluster);
    all.merge(assign_topics(sub, kb, stop, TopicParams{cfg.uniqueness_max}, exec));
  }
  return all;
}

AnnotationResult stage_annotate(std::span<const Page> pages, const std::vector<std::vector<std::size_t>>& clusters,
                                const TopicMap& topics, const KnowledgeBase& kb, const PipelineConfig& cfg,
                                Exec exec) {
  const AnnotateParams params{cfg.min_annotations, cfg.duplicate_page_fraction, cfg.mode};
  AnnotationResult all;
  for (const auto& cluster : clusters) {
    const auto sub = subset(pages, cluster);
    AnnotationResult part = annotate_site(sub, topics, kb, params, exec);
    all.annotations.insert(all.annotations.end(), part.annotations.begin(), part.annotations.end());
    all.admitted_pages.merge(part.admitted_pages);
    all.duplicated_predicates.merge(part.duplicated_predicates);
  }
  std::sort(all.annotations.begin(), all.annotations.end());
  return all;
}

Model stage_train(std::span<const Page> pages, std::span<const Annotation> annotations, const TopicMap& topics,
                  const PipelineConfig& cfg, Exec exec) {
  FrequentStrings freq = frequent_strings(pages, cfg.freq_string_fraction, 30, exec);
  const TrainParams params = cfg.train_params();
  const TrainingSet data = assemble_training_set(annotations, pages, topics, freq, params, exec);
  Model model = train(data, params, exec);
  model.frequent = std::move(freq);
  return model;
}

std::vector<ExtractedTriple> select_all(const Model& model, std::span<const Page> pages, const StageOutputs& out,
                                        double threshold, ExtractMode mode) {
  std::vector<ExtractedTriple> all;
  for (std::size_t k = 0; k < out.extract_pages.size(); ++k) {
    auto part = select_extractions(model, pages[out.extract_pages[k]], out.predictions[k], threshold, mode);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

StageOutputs run_stages(const KnowledgeBase& kb, std::span<const Page> pages, const PipelineConfig& cfg, Exec exec) {
  cfg.validate();
  StageOutputs out;
  out.clusters = cluster_templates(pages, cfg.sim_threshold, exec);
  const StopValues stop = make_stop_values(kb, cfg);
  out.topics = stage_topics(pages, out.clusters, kb, stop, cfg, exec);
  out.annotation = stage_annotate(pages, out.clusters, out.topics, kb, cfg, exec);
  if (out.annotation.admitted_pages.empty()) {
    out.warnings.push_back("no pages were admitted for training; no model or extractions produced");
    return out;
  }
  try {
    out.model = stage_train(pages, out.annotation.annotations, out.topics, cfg, exec);
  } catch (const ModelError& e) {
    out.warnings.push_back(std::string("training skipped: ") + e.what());
    return out;
  }

  for (const auto& cluster : out.clusters) {
    const bool admitted = std::any_of(cluster.begin(), cluster.end(), [&](std::size_t p) {
      return out.annotation.admitted_pages.count(pages[p].page_id()) > 0;
    });
    if (admitted || !cfg.admitted_clusters_only) out.extract_pages.insert(out.extract_pages.end(), cluster.begin(), cluster.end());
  }
  std::sort(out.extract_pages.begin(), out.extract_pages.end());
  out.predictions.resize(out.extract_pages.size());
  const Model& model = *out.model;
  parallel_for(exec, out.extract_pages.size(), [&](std::size_t k) {
    out.predictions[k] = classify_page(model, pages[out.extract_pages[k]], model.frequent);
  });
  out.extractions = select_all(model, pages, out, cfg.threshold, cfg.extract_mode);
  return out;
}

namespace {

struct LoadedInputs {
  KnowledgeBase kb;
  std::vector<Page> pages;
  std::optional<std::vector<ExtractedTriple>> gold_triples;
  std::optional<std::vector<Annotation>> gold_annotations;
  std::optional<std::vector<TopicAssignment>> gold_topics;
};

LoadedInputs load_inputs(const PipelineConfig& cfg, Exec exec) {
  cfg.validate();
  if (cfg.kb_entities.empty() || cfg.kb_triples.empty()) throw ConfigError("kb_entities and kb_triples are required");
  if (cfg.pages_dir.empty()) throw ConfigError("pages directory is required");
  LoadedInputs in;
  auto ents = open_input(cfg.kb_entities, "KB entities file");
  auto trips = open_input(cfg.kb_triples, "KB triples file");
  try {
    in.kb = KnowledgeBase::load(ents, trips, cfg.match_mode());
  } catch (const KbError& e) {
    throw DataError(cfg.kb_entities.string() + " / " + cfg.kb_triples.string() + ": " + e.what());
  }
  in.pages = load_pages(cfg.pages_dir, exec);
  if (!cfg.gold_dir.empty()) {
    if (!fs::is_directory(cfg.gold_dir)) throw DataError("gold directory not found: " + cfg.gold_dir.string());
    if (std::ifstream f(cfg.gold_dir / "triples.jsonl"); f) in.gold_triples = read_extractions(f);
    if (std::ifstream f(cfg.gold_dir / "annotations.jsonl"); f) in.gold_annotations = read_annotations(f);
    if (std::ifstream f(cfg.gold_dir / "topics.jsonl"); f) in.gold_topics = read_topics(f);
  }
  return in;
}

}  // namespace

json run_pipeline(const PipelineConfig& cfg, Exec exec) {
  if (cfg.output_dir.empty()) throw ConfigError("output directory is required");
  const LoadedInputs in = load_inputs(cfg, exec);
  const StageOutputs out = run_stages(in.kb, in.pages, cfg, exec);

  json report;
  report["format"] = "dsx-report/1";
  report["config"] = cfg.to_json();
  std::size_t relation_annotations = 0;
  for (const auto& a : out.annotation.annotations) relation_annotations += a.predicate != kNamePredicate;
  report["counts"] = {{"pages", in.pages.size()},
                      {"kb_entities", in.kb.entity_count()},
                      {"kb_triples", in.kb.triples().size()},
                      {"clusters", out.clusters.size()},
                      {"topics", out.topics.size()},
                      {"annotations", out.annotation.annotations.size()},
                      {"relation_annotations", relation_annotations},
                      {"admitted_pages", out.annotation.admitted_pages.size()},
                      {"extraction_pages", out.extract_pages.size()},
                      {"extractions", out.extractions.size()}};
  report["duplicated_predicates"] = out.annotation.duplicated_predicates;
  report["warnings"] = out.warnings;
  if (out.model) {
    const Model& m = *out.model;
    report["model"] = {{"classes", m.classes},
                       {"features", m.num_features()},
                       {"frequent_strings", m.frequent.size()},
                       {"iterations", m.stats.iterations},
                       {"loss", m.stats.loss},
                       {"grad_norm", m.stats.grad_norm},
                       {"converged", m.stats.converged}};
  }
  json metrics = json::object();
  if (in.gold_triples) {
    metrics["triples"] = triple_metrics(out.extractions, *in.gold_triples).to_json();
    if (cfg.extract_mode == ExtractMode::PageHit) {
      json per = json::object();
      for (const auto& [pred, m] : page_hit_metrics(out.extractions, *in.gold_triples)) per[pred] = m.to_json();
      metrics["page_hits"] = per;
    }
  }
  if (in.gold_annotations) metrics["annotations"] = annotation_metrics(out.annotation.annotations, *in.gold_annotations).to_json();
  if (in.gold_topics) metrics["topics"] = topic_metrics(out.topics, *in.gold_topics).to_json();
  if (!metrics.empty()) report["metrics"] = metrics;

  std::ostringstream topics_s, ann_s, clusters_s, ext_s, model_s;
  write_topics(topics_s, out.topics);
  write_annotations(ann_s, out.annotation.annotations);
  write_clusters(clusters_s, out.clusters, in.pages);
  write_extractions(ext_s, out.extractions);
  if (out.model) out.model->save(model_s);

  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir / "topics.jsonl", topics_s.str());
  write_file(cfg.output_dir / "annotations.jsonl", ann_s.str());
  write_file(cfg.output_dir / "clusters.jsonl", clusters_s.str());
  write_file(cfg.output_dir / "extractions.jsonl", ext_s.str());
  if (out.model) write_file(cfg.output_dir / "model.json", model_s.str());
  write_file(cfg.output_dir / "report.json", report.dump(2) + "\n");
  return report;
}

std::vector<SweepRow> sweep_thresholds(const Model& model, std::span<const Page> pages, const StageOutputs& out,
                                       std::span<const double> thresholds, ExtractMode mode,
                                       const std::vector<ExtractedTriple>* gold) {
  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    const auto ex = select_all(model, pages, out, t, mode);
    SweepRow row{t, ex.size(), std::nullopt};
    if (gold) row.metrics = triple_metrics(ex, *gold);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> sweep_threshold(const PipelineConfig& cfg, std::span<const double> thresholds, Exec exec) {
  for (double t : thresholds)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("thresholds must lie in [0, 1]");
  if (thresholds.empty()) return {};
  const LoadedInputs in = load_inputs(cfg, exec);
  const StageOutputs out = run_stages(in.kb, in.pages, cfg, exec);
  if (!out.model) {
    std::vector<SweepRow> rows;
    for (double t : thresholds) rows.push_back({t, 0, in.gold_triples ? std::optional(triple_metrics({}, *in.gold_triples)) : std::nullopt});
    return rows;
  }
  return sweep_thresholds(*out.model, in.pages, out, thresholds, cfg.extract_mode,
                          in.gold_triples ? &*in.gold_triples : nullptr);
}

}  // namespace dsx
