#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <json.hpp>

#include "dsx/pipeline.hpp"
#include "dsx/records.hpp"
#include "helpers.hpp"

using namespace dsx;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string err;
  std::string out;
};

Run dsx_cli(const std::string& args) {
  static const fs::path logs = testing::scratch_dir("cli-logs");
  static int n = 0;
  const auto out = logs / ("out" + std::to_string(n) + ".txt");
  const auto err = logs / ("err" + std::to_string(n++) + ".txt");
  const std::string cmd = std::string("\"") + DSX_BIN + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

// A generated site shared by the tests in this file.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    auto d = testing::scratch_dir("cli-corpus");
    const auto r = dsx_cli("gen --out \"" + d.string() + "\" --n-pages 60 --recommendation-blocks --seed 3");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return d;
  }();
  return dir;
}

std::string inputs() {
  const auto& d = corpus_dir();
  return "--kb-entities \"" + (d / "kb/entities.jsonl").string() + "\" --kb-triples \"" +
         (d / "kb/triples.jsonl").string() + "\" --pages \"" + (d / "pages").string() + "\"";
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

json report_of(const fs::path& out) { return json::parse(read_file(out / "report.json")); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gen then pipeline succeeds and writes every output") {
    const auto out = testing::scratch_dir("cli-run");
    const auto r = dsx_cli("pipeline " + inputs() + " --gold \"" + (corpus_dir() / "gold").string() +
                           "\" --output \"" + out.string() + "\"");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    for (const char* f : {"topics.jsonl", "annotations.jsonl", "clusters.jsonl", "extractions.jsonl", "model.json",
                          "report.json"})
      CHECK_MESSAGE(fs::exists(out / f), f);
    const auto report = report_of(out);
    CHECK(report.at("format") == "dsx-report/1");
    CHECK(report.at("config").at("threshold") == 0.5);
    CHECK(report.at("config").at("r") == 3);
    CHECK(report.at("counts").at("extractions") == line_count(out / "extractions.jsonl"));
    CHECK(report.at("metrics").at("triples").at("precision").get<double>() > 0.9);
    for (const auto& entry : fs::directory_iterator(out))
      CHECK(entry.path().extension() != ".tmp");
  }

  TEST_CASE("stage subcommands chain through files") {
    const auto d = testing::scratch_dir("cli-stages");
    REQUIRE(dsx_cli("cluster " + inputs() + " --out \"" + (d / "clusters.jsonl").string() + "\"").code == 0);
    REQUIRE(dsx_cli("topics " + inputs() + " --clusters \"" + (d / "clusters.jsonl").string() + "\" --out \"" +
                    (d / "topics.jsonl").string() + "\"")
                .code == 0);
    REQUIRE(dsx_cli("annotate " + inputs() + " --topics \"" + (d / "topics.jsonl").string() + "\" --clusters \"" +
                    (d / "clusters.jsonl").string() + "\" --out \"" + (d / "annotations.jsonl").string() + "\"")
                .code == 0);
    REQUIRE(dsx_cli("train " + inputs() + " --topics \"" + (d / "topics.jsonl").string() + "\" --annotations \"" +
                    (d / "annotations.jsonl").string() + "\" --out \"" + (d / "model.json").string() + "\"")
                .code == 0);
    REQUIRE(dsx_cli("extract " + inputs() + " --model \"" + (d / "model.json").string() + "\" --out \"" +
                    (d / "extractions.jsonl").string() + "\"")
                .code == 0);
    const auto eval = dsx_cli("eval --gold \"" + (corpus_dir() / "gold").string() + "\" --extractions \"" +
                              (d / "extractions.jsonl").string() + "\" --topics \"" + (d / "topics.jsonl").string() +
                              "\"");
    REQUIRE_MESSAGE(eval.code == 0, eval.err);
    const auto metrics = json::parse(eval.out);
    CHECK(metrics.contains("triples"));
    CHECK(metrics.contains("topics"));

    const auto full = testing::scratch_dir("cli-stages-full");
    REQUIRE(dsx_cli("pipeline " + inputs() + " --output \"" + full.string() + "\"").code == 0);
    CHECK(read_file(d / "annotations.jsonl") == read_file(full / "annotations.jsonl"));
    CHECK(read_file(d / "model.json") == read_file(full / "model.json"));
    CHECK(read_file(d / "extractions.jsonl") == read_file(full / "extractions.jsonl"));
  }

  TEST_CASE("missing KB file names the path") {
    const auto out = testing::scratch_dir("cli-nokb");
    const auto r = dsx_cli("pipeline --kb-entities /nonexistent/ents.jsonl --kb-triples /nonexistent/triples.jsonl"
                           " --pages \"" + (corpus_dir() / "pages").string() + "\" --output \"" + out.string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.err.find("/nonexistent/ents.jsonl") != std::string::npos);
  }

  TEST_CASE("nonexistent pages directory leaves no outputs") {
    const auto parent = testing::scratch_dir("cli-nopages");
    const auto out = parent / "out";
    const auto& d = corpus_dir();
    const auto r = dsx_cli("pipeline --kb-entities \"" + (d / "kb/entities.jsonl").string() + "\" --kb-triples \"" +
                           (d / "kb/triples.jsonl").string() + "\" --pages /nonexistent/pages --output \"" +
                           out.string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.err.find("/nonexistent/pages") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
  }

  TEST_CASE("usage and config errors exit with 1") {
    CHECK(dsx_cli("").code == 1);
    CHECK(dsx_cli("pipeline --no-such-flag").code == 1);
    CHECK(dsx_cli("pipeline " + inputs() + " --output /tmp/x --threshold 1.5").code == 1);
    CHECK(dsx_cli("pipeline " + inputs() + " --output /tmp/x --mode sideways").code == 1);
    CHECK(dsx_cli("--help").code == 0);

    const auto d = testing::scratch_dir("cli-badcfg");
    std::ofstream(d / "bad.json") << R"({"threshold": 0.5, "no_such_key": 1})";
    const auto r = dsx_cli("pipeline --config \"" + (d / "bad.json").string() + "\"");
    CHECK(r.code == 1);
    CHECK(r.err.find("no_such_key") != std::string::npos);
    std::ofstream(d / "broken.json") << "{";
    CHECK(dsx_cli("pipeline --config \"" + (d / "broken.json").string() + "\"").code == 1);
  }

  TEST_CASE("config file values yield to the command line") {
    const auto d = testing::scratch_dir("cli-config");
    const auto& c = corpus_dir();
    json cfg = {{"kb_entities", (c / "kb/entities.jsonl").string()},
                {"kb_triples", (c / "kb/triples.jsonl").string()},
                {"pages", (c / "pages").string()},
                {"output", (d / "out").string()},
                {"threshold", 0.3},
                {"r", 2}};
    std::ofstream(d / "config.json") << cfg.dump();
    REQUIRE(dsx_cli("pipeline --config \"" + (d / "config.json").string() + "\" --threshold 0.8").code == 0);
    const auto report = report_of(d / "out");
    CHECK(report.at("config").at("threshold") == 0.8);
    CHECK(report.at("config").at("r") == 2);
  }

  TEST_CASE("higher threshold never extracts more") {
    const auto lo = testing::scratch_dir("cli-t05"), hi = testing::scratch_dir("cli-t09");
    REQUIRE(dsx_cli("pipeline " + inputs() + " --threshold 0.5 --output \"" + lo.string() + "\"").code == 0);
    REQUIRE(dsx_cli("pipeline " + inputs() + " --threshold 0.9 --output \"" + hi.string() + "\"").code == 0);
    CHECK(line_count(hi / "extractions.jsonl") <= line_count(lo / "extractions.jsonl"));
  }

  TEST_CASE("sweep agrees with the pipeline") {
    const auto out = testing::scratch_dir("cli-sweep");
    REQUIRE(dsx_cli("pipeline " + inputs() + " --threshold 0.6 --output \"" + out.string() + "\"").code == 0);
    const auto one = dsx_cli("sweep " + inputs() + " --thresholds 0.6");
    REQUIRE_MESSAGE(one.code == 0, one.err);
    const auto row = json::parse(one.out);
    CHECK(row.at("extractions") == line_count(out / "extractions.jsonl"));

    const auto many = dsx_cli("sweep " + inputs() + " --gold \"" + (corpus_dir() / "gold").string() +
                              "\" --thresholds 0.5,0.75,0.9");
    REQUIRE(many.code == 0);
    std::istringstream lines(many.out);
    std::vector<json> rows;
    for (std::string l; std::getline(lines, l);) rows.push_back(json::parse(l));
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].at("extractions").get<std::size_t>() <= rows[i - 1].at("extractions").get<std::size_t>());
    CHECK(rows[0].contains("precision"));

    CHECK(dsx_cli("sweep " + inputs() + " --thresholds 0.5,abc").code == 1);

    PipelineConfig cfg;
    const auto& d = corpus_dir();
    cfg.kb_entities = d / "kb/entities.jsonl";
    cfg.kb_triples = d / "kb/triples.jsonl";
    cfg.pages_dir = d / "pages";
    CHECK(sweep_threshold(cfg, std::vector<double>{}).empty());
  }
}
