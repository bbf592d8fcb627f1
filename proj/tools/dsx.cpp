// Command-line driver: corpus generation, individual stages, the full
// pipeline, evaluation and threshold sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsx/metrics.hpp"
#include "dsx/pipeline.hpp"
#include "dsx/records.hpp"
#include "dsx/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dsx;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Pipeline parameters shared by the stage subcommands. Values given on the
// command line are collected as JSON and overlaid on the config file.
struct ConfigOptions {
  std::string config_file;
  json overrides = json::object();
  bool serial = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file");
    text(app, "--kb-entities", "kb_entities", "KB entity records");
    text(app, "--kb-triples", "kb_triples", "KB triple records");
    text(app, "--pages", "pages", "directory of .html pages");
    text(app, "--output", "output", "output directory");
    text(app, "--gold", "gold", "gold directory (triples/annotations/topics.jsonl)");
    text(app, "--countries", "countries", "country list, one per line");
    number<int>(app, "--uniqueness-max", "uniqueness_max");
    number<int>(app, "--min-annotations", "min_annotations");
    number<double>(app, "--triple-fraction", "triple_fraction");
    number<std::size_t>(app, "--stop-min-count", "stop_min_count");
    number<double>(app, "--duplicate-page-fraction", "duplicate_page_fraction");
    number<int>(app, "--r", "r");
    number<double>(app, "--C", "C");
    number<double>(app, "--tol", "tol");
    number<int>(app, "--max-iter", "max_iter");
    number<double>(app, "--threshold", "threshold");
    number<double>(app, "--sim-threshold", "sim_threshold");
    number<double>(app, "--freq-string-fraction", "freq_string_fraction");
    number<std::uint64_t>(app, "--seed", "seed");
    app->add_flag_function("--fuzzy", [this](std::int64_t) { overrides["fuzzy"] = true; }, "fuzzy surface matching");
    app->add_flag_function(
        "--admitted-clusters-only", [this](std::int64_t) { overrides["admitted_clusters_only"] = true; },
        "extract only from clusters that produced annotations");
    app->add_option_function<std::string>(
           "--mode", [this](const std::string& v) { overrides["mode"] = v; }, "annotation mode")
        ->check(CLI::IsMember({"full", "topic-only"}));
    app->add_option_function<std::string>(
           "--extract-mode", [this](const std::string& v) { overrides["extract_mode"] = v; }, "extraction mode")
        ->check(CLI::IsMember({"all", "page-hit"}));
    app->add_flag("--serial", serial, "run the serial reference kernels");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("config file not found: " + config_file);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(config_file + ": " + e.what());
      }
      cfg.merge_json(j, fs::path(config_file).parent_path());
    }
    cfg.merge_json(overrides);
    cfg.validate();
    return cfg;
  }

  Exec exec() const { return serial ? Exec::Serial : Exec::Parallel; }

 private:
  void text(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }
  template <typename T>
  void number(CLI::App* app, const std::string& flag, const std::string& key) {
    app->add_option_function<T>(flag, [this, key](const T& v) { overrides[key] = v; });
  }
};

std::ifstream open_or_throw(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

KnowledgeBase load_kb(const PipelineConfig& cfg) {
  if (cfg.kb_entities.empty() || cfg.kb_triples.empty()) throw ConfigError("--kb-entities and --kb-triples are required");
  auto e = open_or_throw(cfg.kb_entities);
  auto t = open_or_throw(cfg.kb_triples);
  return KnowledgeBase::load(e, t, cfg.match_mode());
}

std::vector<Page> load_pages_of(const PipelineConfig& cfg, Exec exec) {
  if (cfg.pages_dir.empty()) throw ConfigError("--pages is required");
  return load_pages(cfg.pages_dir, exec);
}

// Reads a clusters file into page positions, or recomputes the clustering.
std::vector<std::vector<std::size_t>> clusters_for(const std::string& file, std::span<const Page> pages,
                                                   const PipelineConfig& cfg, Exec exec) {
  if (file.empty()) return cluster_templates(pages, cfg.sim_threshold, exec);
  auto in = open_or_throw(file);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < pages.size(); ++i) pos[pages[i].page_id()] = i;
  std::vector<std::vector<std::size_t>> out;
  for (const auto& ids : read_clusters(in)) {
    std::vector<std::size_t> c;
    for (const auto& id : ids) {
      auto it = pos.find(id);
      if (it == pos.end()) throw DataError("clusters file names unknown page '" + id + "'");
      c.push_back(it->second);
    }
    out.push_back(std::move(c));
  }
  return out;
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file(p, content);
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad threshold '" + item + "'");
    }
  }
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distantly supervised relation extraction for semi-structured websites"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic site with seed KB and gold");
  std::string gen_out, gen_spec;
  std::optional<int> gen_pages;
  std::optional<std::uint64_t> gen_seed;
  std::optional<double> gen_cov, gen_missing, gen_shift;
  bool gen_recs = false, gen_dup = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--spec", gen_spec, "JSON generator spec");
  gen->add_option("--n-pages", gen_pages, "number of pages");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--kb-coverage", gen_cov, "fraction of rendered facts in the seed KB");
  gen->add_option("--missing-field-rate", gen_missing, "probability a field block is dropped");
  gen->add_option("--index-shift-rate", gen_shift, "probability of extra sections before the lists");
  gen->add_flag("--recommendation-blocks", gen_recs, "add blocks describing other movies");
  gen->add_flag("--duplicated-values", gen_dup, "add a constant genre list to every page");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "group pages by template");
  ConfigOptions cluster_opts;
  std::string cluster_out;
  cluster_opts.attach(cluster);
  cluster->add_option("--out", cluster_out, "clusters.jsonl (default stdout)");

  // topics
  auto* topics = app.add_subcommand("topics", "identify the topic entity of each page");
  ConfigOptions topics_opts;
  std::string topics_out, topics_clusters;
  topics_opts.attach(topics);
  topics->add_option("--clusters", topics_clusters, "clusters.jsonl from `cluster`");
  topics->add_option("--out", topics_out, "topics.jsonl (default stdout)");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "label page nodes with KB relations");
  ConfigOptions annotate_opts;
  std::string annotate_out, annotate_topics, annotate_clusters;
  annotate_opts.attach(annotate);
  annotate->add_option("--topics", annotate_topics, "topics.jsonl")->required();
  annotate->add_option("--clusters", annotate_clusters, "clusters.jsonl from `cluster`");
  annotate->add_option("--out", annotate_out, "annotations.jsonl (default stdout)");

  // train
  auto* trainc = app.add_subcommand("train", "fit the node classifier");
  ConfigOptions train_opts;
  std::string train_out, train_topics, train_annotations;
  train_opts.attach(trainc);
  trainc->add_option("--topics", train_topics, "topics.jsonl")->required();
  trainc->add_option("--annotations", train_annotations, "annotations.jsonl")->required();
  trainc->add_option("--out", train_out, "model.json")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "apply a model to pages");
  ConfigOptions extract_opts;
  std::string extract_out, extract_model;
  extract_opts.attach(extract);
  extract->add_option("--model", extract_model, "model.json")->required();
  extract->add_option("--out", extract_out, "extractions.jsonl (default stdout)");

  // eval
  auto* eval = app.add_subcommand("eval", "score outputs against gold records");
  std::string eval_extractions, eval_annotations, eval_topics, eval_gold, eval_out;
  bool eval_page_hit = false;
  eval->add_option("--gold", eval_gold, "gold directory")->required();
  eval->add_option("--extractions", eval_extractions, "extractions.jsonl");
  eval->add_option("--annotations", eval_annotations, "annotations.jsonl");
  eval->add_option("--topics", eval_topics, "topics.jsonl");
  eval->add_flag("--page-hit", eval_page_hit, "also report per-predicate page hits");
  eval->add_option("--out", eval_out, "metrics JSON (default stdout)");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write all outputs");
  ConfigOptions pipeline_opts;
  pipeline_opts.attach(pipeline);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "extraction count and precision across thresholds");
  ConfigOptions sweep_opts;
  std::string sweep_thresholds_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", sweep_out;
  sweep_opts.attach(sweep);
  sweep->add_option("--thresholds", sweep_thresholds_text, "comma-separated thresholds");
  sweep->add_option("--out", sweep_out, "table as JSON lines (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      SynthSpec spec;
      if (!gen_spec.empty()) {
        std::ifstream in(gen_spec);
        if (!in) throw ConfigError("spec file not found: " + gen_spec);
        try {
          spec = synth_spec_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
          throw ConfigError(gen_spec + ": " + e.what());
        }
      }
      if (gen_pages) spec.n_pages = *gen_pages;
      if (gen_seed) spec.seed = *gen_seed;
      if (gen_cov) spec.kb_coverage = *gen_cov;
      if (gen_missing) spec.missing_field_rate = *gen_missing;
      if (gen_shift) spec.index_shift_rate = *gen_shift;
      if (gen_recs) spec.recommendation_blocks = true;
      if (gen_dup) spec.duplicated_values = true;
      const SynthCorpus corpus = generate_corpus(spec);
      corpus.write(gen_out);
      std::cerr << "wrote " << corpus.pages.size() << " pages, " << corpus.kb_triples.size() << " KB triples, "
                << corpus.gold_triples.size() << " gold triples to " << gen_out << "\n";
    } else if (*cluster) {
      const PipelineConfig cfg = cluster_opts.resolve();
      const auto pages = load_pages_of(cfg, cluster_opts.exec());
      const auto clusters = cluster_templates(pages, cfg.sim_threshold, cluster_opts.exec());
      write_output(cluster_out, render([&](std::ostream& o) { write_clusters(o, clusters, pages); }));
    } else if (*topics) {
      const PipelineConfig cfg = topics_opts.resolve();
      const Exec exec = topics_opts.exec();
      const KnowledgeBase kb = load_kb(cfg);
      const auto pages = load_pages_of(cfg, exec);
      const auto clusters = clusters_for(topics_clusters, pages, cfg, exec);
      const TopicMap t = stage_topics(pages, clusters, kb, make_stop_values(kb, cfg), cfg, exec);
      write_output(topics_out, render([&](std::ostream& o) { write_topics(o, t); }));
    } else if (*annotate) {
      const PipelineConfig cfg = annotate_opts.resolve();
      const Exec exec = annotate_opts.exec();
      const KnowledgeBase kb = load_kb(cfg);
      const auto pages = load_pages_of(cfg, exec);
      const auto clusters = clusters_for(annotate_clusters, pages, cfg, exec);
      auto tin = open_or_throw(annotate_topics);
      const TopicMap t = to_topic_map(read_topics(tin));
      const AnnotationResult res = stage_annotate(pages, clusters, t, kb, cfg, exec);
      write_output(annotate_out, render([&](std::ostream& o) { write_annotations(o, res.annotations); }));
    } else if (*trainc) {
      const PipelineConfig cfg = train_opts.resolve();
      const Exec exec = train_opts.exec();
      const auto pages = load_pages_of(cfg, exec);
      auto tin = open_or_throw(train_topics);
      auto ain = open_or_throw(train_annotations);
      const TopicMap t = to_topic_map(read_topics(tin));
      const auto anns = read_annotations(ain);
      const Model model = stage_train(pages, anns, t, cfg, exec);
      write_output(train_out, render([&](std::ostream& o) { model.save(o); }));
      std::cerr << "trained " << model.num_classes() << " classes over " << model.num_features() << " features in "
                << model.stats.iterations << " iterations\n";
    } else if (*extract) {
      const PipelineConfig cfg = extract_opts.resolve();
      const Exec exec = extract_opts.exec();
      auto min = open_or_throw(extract_model);
      const Model model = Model::load(min);
      const auto pages = load_pages_of(cfg, exec);
      const auto ex = extract_site(model, pages, cfg.threshold, cfg.extract_mode, exec);
      write_output(extract_out, render([&](std::ostream& o) { write_extractions(o, ex); }));
    } else if (*eval) {
      const fs::path gold(eval_gold);
      json out = json::object();
      if (!eval_extractions.empty()) {
        auto ein = open_or_throw(eval_extractions);
        auto gin = open_or_throw(gold / "triples.jsonl");
        const auto ex = read_extractions(ein);
        const auto g = read_extractions(gin);
        out["triples"] = triple_metrics(ex, g).to_json();
        if (eval_page_hit) {
          json per = json::object();
          for (const auto& [pred, m] : page_hit_metrics(ex, g)) per[pred] = m.to_json();
          out["page_hits"] = per;
        }
      }
      if (!eval_annotations.empty()) {
        auto ain = open_or_throw(eval_annotations);
        auto gin = open_or_throw(gold / "annotations.jsonl");
        out["annotations"] = annotation_metrics(read_annotations(ain), read_annotations(gin)).to_json();
      }
      if (!eval_topics.empty()) {
        auto tin = open_or_throw(eval_topics);
        auto gin = open_or_throw(gold / "topics.jsonl");
        out["topics"] = topic_metrics(to_topic_map(read_topics(tin)), read_topics(gin)).to_json();
      }
      write_output(eval_out, out.dump(2) + "\n");
    } else if (*pipeline) {
      const PipelineConfig cfg = pipeline_opts.resolve();
      const json report = run_pipeline(cfg, pipeline_opts.exec());
      for (const auto& w : report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
      std::cerr << "pipeline: " << report["counts"].dump() << "\n";
      if (report.contains("metrics")) std::cerr << "metrics: " << report["metrics"].dump() << "\n";
    } else if (*sweep) {
      const PipelineConfig cfg = sweep_opts.resolve();
      const auto thresholds = parse_thresholds(sweep_thresholds_text);
      const auto rows = sweep_threshold(cfg, thresholds, sweep_opts.exec());
      std::string table;
      for (const auto& row : rows) {
        json r = {{"threshold", row.threshold}, {"extractions", row.count}};
        if (row.metrics) {
          r["precision"] = optional_json(row.metrics->precision);
          r["recall"] = optional_json(row.metrics->recall);
          r["f1"] = optional_json(row.metrics->f1);
        }
        table += r.dump() + "\n";
      }
      write_output(sweep_out, table);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    // KB, parse, xpath, model and I/O failures
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
