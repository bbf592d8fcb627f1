// Serial reference vs OpenMP timings for the parallel kernels.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsx/annotate.hpp"
#include "dsx/features.hpp"
#include "dsx/model.hpp"
#include "dsx/optimizer.hpp"
#include "dsx/parallel.hpp"
#include "dsx/pipeline.hpp"
#include "dsx/synth.hpp"
#include "dsx/topic.hpp"

using namespace dsx;

namespace {

// Best of `reps` wall times in milliseconds.
double time_ms(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

template <typename Fn>
void row(const char* name, int reps, Fn&& kernel) {
  decltype(kernel(Exec::Serial)) serial_out, parallel_out;
  const double s = time_ms(reps, [&] { serial_out = kernel(Exec::Serial); });
  const double p = time_ms(reps, [&] { parallel_out = kernel(Exec::Parallel); });
  std::printf("%-24s %10.2f %10.2f %8.2fx  %s\n", name, s, p, s / p, serial_out == parallel_out ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  int n_pages = 400;
  int reps = 3;
  app.add_option("--n-pages", n_pages, "synthetic pages");
  app.add_option("--reps", reps, "repetitions per kernel (best is reported)");
  CLI11_PARSE(app, argc, argv);

  SynthSpec spec;
  spec.n_pages = n_pages;
  spec.recommendation_blocks = true;
  spec.duplicated_values = true;
  const auto corpus = generate_corpus(spec);
  const auto kb = corpus.kb();
  const auto pages = corpus.parse_pages();
  const PipelineConfig cfg;
  const auto stop = make_stop_values(kb, cfg);
  const auto topics = assign_topics(pages, kb, stop);
  const auto annotated = annotate_site(pages, topics, kb);
  const auto freq = frequent_strings(pages, cfg.freq_string_fraction);
  const auto ts = assemble_training_set(annotated.annotations, pages, topics, freq, cfg.train_params());

  std::vector<std::string> classes;
  for (const auto& e : ts.examples)
    if (e.label != kOtherClass && std::find(classes.begin(), classes.end(), e.label) == classes.end())
      classes.push_back(e.label);
  std::sort(classes.begin(), classes.end());
  std::vector<FeatureVector> rows;
  std::vector<std::size_t> labels;
  for (const auto& e : ts.examples) {
    rows.push_back(e.features);
    const auto it = std::find(classes.begin(), classes.end(), e.label);
    labels.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  const SoftmaxObjective objective(rows, labels, classes.size(), ts.vocab.size(), cfg.C);
  std::vector<double> theta(objective.dimension());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = 0.01 * static_cast<double>(i % 7) - 0.03;

  std::vector<XPath> genre_paths;
  for (const auto& p : pages) {
    auto t = topics.find(p.page_id());
    if (t == topics.end()) continue;
    for (const auto& [key, xs] : object_mentions(p, t->second, kb))
      if (key.predicate == "cast" || key.predicate == "genre") genre_paths.insert(genre_paths.end(), xs.begin(), xs.end());
  }

  std::printf("threads %d, pages %zu, examples %zu, features %zu, mention paths %zu\n", max_threads(), pages.size(),
              rows.size(), ts.vocab.size(), genre_paths.size());
  std::printf("%-24s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  row("softmax loss+gradient", reps, [&](Exec e) {
    std::vector<double> g(objective.dimension());
    const double v = objective.evaluate(theta, g, e);
    g.push_back(v);
    return g;
  });
  row("shape similarity", reps, [&](Exec e) { return shape_similarity_matrix(pages, e); });
  row("template clustering", reps, [&](Exec e) { return cluster_templates(pages, cfg.sim_threshold, e); });
  row("xpath clustering", reps, [&](Exec e) { return cluster_object_xpaths(genre_paths, 3, e).label; });
  row("topic assignment", reps, [&](Exec e) { return assign_topics(pages, kb, stop, {}, e); });
  row("frequent strings", reps, [&](Exec e) { return frequent_strings(pages, cfg.freq_string_fraction, 30, e); });
  row("training set features", reps, [&](Exec e) {
    const auto t = assemble_training_set(annotated.annotations, pages, topics, freq, cfg.train_params(), e);
    std::vector<std::uint32_t> flat;
    for (const auto& ex : t.examples) flat.insert(flat.end(), ex.features.indices.begin(), ex.features.indices.end());
    return flat;
  });
  return 0;
}
