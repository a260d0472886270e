#include <doctest.h>

#include <json.hpp>

#include "support.hpp"
#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/metrics.hpp"
#include "ttpx/pipeline.hpp"

using namespace ttpx;
namespace fs = std::filesystem;

namespace {

const char* const kCfg2 =
    "name = t\nconfig = CFG2_CLASSIFY\ncorpus = atd\ncatalog = cat.jsonl\noutput = out\n"
    "thresholds = 0.25, 0.8\ntraining_set = train.jsonl\n";

EvalReport sample_report() {
  EvalReport r;
  r.profile_name = "sample";
  r.config = ConfigKind::Cfg1Zeroshot;
  r.match_mode = MatchMode::NameOrId;
  r.profile_echo = {{"name", "sample"}};
  EvalBlock b;
  b.label = "llama2-7b";
  b.model = "llama2-7b";
  for (auto [id, gt, tp, fp] : std::vector<std::tuple<const char*, std::size_t, std::size_t, std::size_t>>{
           {"APT29", 3, 1, 9}, {"FIN6", 24, 3, 7}}) {
    ReportRow row{id, gt, EvalCounts{id, tp, fp, gt - tp}, {}};
    row.metrics = prf(row.counts);
    b.reports.push_back(row);
  }
  b.macro = macro_average({b.reports[0].metrics, b.reports[1].metrics});
  r.blocks.push_back(b);
  r.flags = {"baseline substitution"};
  r.warnings = {"a | pipe"};
  return r;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("profile parsing, defaults and path resolution") {
  const auto p = parse_profile(kCfg2, "/base/dir");
  CHECK(p.config == ConfigKind::Cfg2Classify);
  CHECK(p.corpus == fs::path("/base/dir/atd"));
  CHECK(p.thresholds == std::vector<double>{0.25, 0.8});
  CHECK(p.match_mode == MatchMode::NameAndId);
  CHECK(p.corpus_kind == ReportSource::ATD);
  CHECK(p.restrict_top50);
  CHECK(p.backend == Backend::Baseline);

  const auto cfg1 = parse_profile(
      "name = z\nconfig = CFG1_ZEROSHOT\ncorpus = /abs/ael\ncatalog = c\noutput = o\nmodels = a, b\n"
      "fixtures = f\nzeroshot_prompt = z.prompt # trailing comment\n",
      "/b");
  CHECK(cfg1.match_mode == MatchMode::NameOrId);
  CHECK(cfg1.corpus_kind == ReportSource::AEL);
  CHECK_FALSE(cfg1.restrict_top50);
  CHECK(cfg1.corpus == fs::path("/abs/ael"));
  CHECK(cfg1.models == std::vector<std::string>{"a", "b"});
  CHECK(*cfg1.zeroshot_prompt == fs::path("/b/z.prompt"));

  const auto overridden = parse_profile(kCfg2, "/b", {"thresholds=0.5", "match_mode=NAME_OR_ID"});
  CHECK(overridden.thresholds == std::vector<double>{0.5});
  CHECK(overridden.match_mode == MatchMode::NameOrId);
  bool echoed = false;
  for (const auto& [k, v] : overridden.echo) echoed |= k == "thresholds" && v == "0.5";
  CHECK(echoed);
}

TEST_CASE("profile errors are usage errors") {
  CHECK_THROWS_AS(parse_profile(std::string(kCfg2) + "seed = 1\nseed = 2\n", "/b"), UsageError);
  CHECK_THROWS_AS(parse_profile(std::string(kCfg2) + "colour = red\n", "/b"), UsageError);
  CHECK_THROWS_AS(parse_profile(std::string(kCfg2) + "epochs = many\n", "/b"), UsageError);
  CHECK_THROWS_AS(parse_profile("name = x\n", "/b"), UsageError);
  CHECK_THROWS_AS(parse_profile(kCfg2, "/b", {"thresholds=0.25,1.0"}), UsageError);
  CHECK_THROWS_AS(parse_profile(kCfg2, "/b", {"thresholds=0.5,0.5"}), UsageError);
  CHECK_THROWS_AS(parse_profile(kCfg2, "/b", {"band_low=10"}), UsageError);
  CHECK_THROWS_AS(parse_profile(kCfg2, "/b", {"backend=remote"}), UsageError);
  CHECK_THROWS_AS(parse_profile(kCfg2, "/b", {"config=CFG4_REBALANCED"}), UsageError);
  CHECK_THROWS_AS(parse_profile(kCfg2, "/b", {"config=CFG3_SUMMARIZE_CLASSIFY"}), UsageError);
  try {
    parse_profile(kCfg2, "/b", {"config=CFG1_ZEROSHOT"});
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    const std::string what = e.what();
    CHECK(what.find("'models' is required") != std::string::npos);
    CHECK(what.find("'fixtures' is required") != std::string::npos);
  }
  CHECK_THROWS_AS(load_profile("/nonexistent/x.profile"), Error);
}

TEST_CASE("count cells") {
  CHECK(count_cell(2, 9) == "-2 / +9");
  CHECK(count_cell(0, 9) == "0 / +9");
  CHECK(count_cell(21, 0) == "-21 / 0");
  CHECK(count_cell(0, 0) == "0 / 0");
}

TEST_CASE("report json round trip and audit") {
  const auto r = sample_report();
  const auto text = eval_report_to_json(r);
  const auto back = eval_report_from_json(text);
  CHECK(eval_report_to_json(back) == text);
  CHECK(audit_report(back).empty());

  auto j = nlohmann::json::parse(text);
  j["blocks"][0]["reports"][0]["tp"] = 2;
  const auto tampered = eval_report_from_json(j.dump());
  CHECK_FALSE(audit_report(tampered).empty());
  CHECK_THROWS_AS(eval_report_from_json("{\"blocks\": 3}"), DataError);
}

TEST_CASE("rendered tables") {
  const auto r = sample_report();
  const auto text = render_tables(r, TableFormat::Text);
  CHECK(text.find("== Counts (-FN / +FP) ==") != std::string::npos);
  CHECK(text.find("APT29") != std::string::npos);
  CHECK(text.find("-2 / +9") != std::string::npos);
  CHECK(text.find("-21 / +7") != std::string::npos);
  CHECK(text.find("baseline substitution") != std::string::npos);

  const auto md = render_tables(r, TableFormat::Markdown);
  CHECK(md.find("### Counts (-FN / +FP)") != std::string::npos);
  CHECK(md.find("| -2 / +9 |") != std::string::npos);
  CHECK(md.find("a \\| pipe") != std::string::npos);

  const auto csv = render_tables(r, TableFormat::Csv);
  CHECK(csv.rfind("table,row,column,value\n", 0) == 0);
  CHECK(parse_table_format("markdown") == TableFormat::Markdown);
  CHECK_THROWS_AS(parse_table_format("html"), UsageError);
}

TEST_CASE("zero-shot replay reproduces the published counts") {
  ttpx::test::TempDir out("cfg1");
  const auto profile = load_profile(ttpx::test::source_dir() / "profiles/cfg1.profile", {"output=" + out.path().string()});
  const auto report = run_profile(profile);
  CHECK(audit_report(report).empty());
  REQUIRE(report.blocks.size() == 3);
  bool skipped = false;
  for (const auto& s : report.skipped) skipped |= s.find("Sandworm") != std::string::npos;
  CHECK(skipped);

  const auto rows = parse_counts_csv(io::read_text_file(ttpx::test::source_dir() / "data/reference/llama2_counts.csv"));
  std::size_t compared = 0;
  for (const auto& block : report.blocks) {
    CHECK(block.reports.size() == 6);
    for (const auto& r : block.reports) {
      for (const auto& row : rows) {
        if (row.model != block.model || row.report != r.report_id) continue;
        CAPTURE(row.model);
        CAPTURE(row.report);
        CHECK(r.counts.tp == row.tp);
        CHECK(r.counts.fp == row.fp);
        CHECK(r.ground_truth == row.ground_truth);
        CHECK(r.counts.tp + r.counts.fn == r.ground_truth);
        ++compared;
      }
    }
  }
  CHECK(compared == 18);
  for (auto name : {"counts.jsonl", "extractions.jsonl", "report.json", "tables.txt", "tables.md", "tables.csv",
                    "profile.txt"}) {
    CHECK(fs::exists(out / name));
  }
}

TEST_CASE("replay without fixtures fails as an upstream error") {
  ttpx::test::TempDir out("cfg1");
  ttpx::test::TempDir empty("fx");
  const auto profile = load_profile(ttpx::test::source_dir() / "profiles/cfg1.profile",
                                    {"output=" + out.path().string(), "fixtures=" + empty.path().string()});
  CHECK_THROWS_AS(run_profile(profile), UpstreamError);
}

TEST_CASE("strict audit raises after writing artifacts") {
  ttpx::test::TempDir out("cfg4");
  ttpx::test::TempDir fixtures("fx");
  // One generated sentence per request leaves the rare classes below the band.
  struct Stingy : LlmTransport {
    std::string send(const LlmRequest& r) override {
      if (r.user_prompt.find("new sentences") != std::string::npos) return "1. The actor ran a single tool.\n";
      return "The operators listed running processes.\n";
    }
  };
  const auto profile = load_profile(ttpx::test::source_dir() / "profiles/cfg4.profile",
                                    {"output=" + out.path().string(), "fixtures=" + fixtures.path().string(),
                                     "gateway_mode=LIVE", "llm_endpoint=scripted://", "strict_audit=true",
                                     "max_iterations=1", "epochs=5"});
  CHECK_THROWS_AS(run_profile(profile, std::make_shared<Stingy>()), AuditError);
  CHECK(fs::exists(out / "report.json"));
  CHECK(io::read_text_file(out / "report.json").find("rebalance residual") != std::string::npos);
}

}
