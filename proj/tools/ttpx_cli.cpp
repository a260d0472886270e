#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttpx/catalog.hpp"
#include "ttpx/classifier.hpp"
#include "ttpx/corpus.hpp"
#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/llm_gateway.hpp"
#include "ttpx/metrics.hpp"
#include "ttpx/pipeline.hpp"
#include "ttpx/rebalancer.hpp"
#include "ttpx/summarizer.hpp"
#include "ttpx/zeroshot.hpp"

using namespace ttpx;
using ordered_json = nlohmann::ordered_json;

namespace {

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
  } else {
    io::write_file_atomic(out_path, content);
  }
}

struct GatewayArgs {
  std::string fixtures;
  std::string mode = "REPLAY";
  std::string endpoint;

  void add_to(CLI::App* app) {
    app->add_option("--fixtures", fixtures, "Replay fixture / response cache directory")->required();
    app->add_option("--mode", mode, "REPLAY or LIVE");
    app->add_option("--endpoint", endpoint, "Chat-completion base URL (LIVE)");
  }

  std::unique_ptr<LlmGateway> make() const {
    GatewayOptions options;
    options.mode = parse_gateway_mode(mode);
    std::shared_ptr<LlmTransport> transport;
    if (options.mode == GatewayMode::Live) {
      if (endpoint.empty()) throw UsageError("--endpoint is required in LIVE mode");
      transport = make_http_transport(endpoint);
    }
    return std::make_unique<LlmGateway>(options, FixtureStore(fixtures), transport);
  }
};

struct InputArgs {
  std::string report;
  std::string text;

  void add_to(CLI::App* app) {
    auto* r = app->add_option("--report", report, "Annotated report file");
    auto* t = app->add_option("--text", text, "Plain text file");
    r->excludes(t);
  }

  RawReport load() const {
    if (!report.empty()) return parse_report_file(io::read_text_file(report), report).report;
    if (text.empty()) throw UsageError("one of --report or --text is required");
    RawReport r;
    r.report_id = std::filesystem::path(text).stem().string();
    r.body = io::read_text_file(text);
    r.word_count = word_count(r.body);
    return r;
  }
};

ScrubOptions scrub_options_from(const std::string& path) {
  return path.empty() ? ScrubOptions::defaults() : ScrubOptions::load(path);
}

CleanReport clean_of(const RawReport& r, const ScrubOptions& options) {
  auto s = scrub(r.body, options);
  return {r.report_id, std::move(s.body), std::move(s.removals)};
}

ordered_json ids_json(const std::set<TechniqueId>& ids) {
  auto a = ordered_json::array();
  for (const auto& id : ids) a.push_back(id.str());
  return a;
}

std::string histogram_text(const ClassHistogram& before, const ClassHistogram& after) {
  std::string s = "technique_id,before,after\n";
  for (const auto& [id, n] : after) {
    auto it = before.find(id);
    s += id.str() + "," + std::to_string(it == before.end() ? 0 : it->second) + "," + std::to_string(n) + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATT&CK technique extraction workbench"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a corpus and list its reports and labels");
  std::string corpus_dir, corpus_kind = "AEL", catalog_path, patterns_path, out_path, sentences_out;
  bool top50_only = false;
  ingest->add_option("--corpus", corpus_dir, "Directory of report files")->required();
  ingest->add_option("--kind", corpus_kind, "AEL or ATD");
  ingest->add_option("--catalog", catalog_path, "Technique catalog (JSON Lines)");
  ingest->add_option("--scrub-patterns", patterns_path, "Extraneous-line patterns");
  ingest->add_flag("--top50", top50_only, "Restrict truth labels to the 50 top-ranked techniques");
  ingest->add_option("--out", out_path, "Output file (default stdout)");
  ingest->add_option("--sentences-out", sentences_out, "Write sentence records (ATD) as JSON Lines");

  // scrub
  auto* scrub_cmd = app.add_subcommand("scrub", "Remove technique IDs, URLs and extraneous lines");
  InputArgs scrub_in;
  std::string removals_out;
  scrub_in.add_to(scrub_cmd);
  scrub_cmd->add_option("--patterns", patterns_path, "Extraneous-line patterns");
  scrub_cmd->add_option("--out", out_path, "Output file (default stdout)");
  scrub_cmd->add_option("--removals", removals_out, "Write the removal log as JSON Lines");

  // summarize
  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize one report through the LLM gateway");
  InputArgs sum_in;
  GatewayArgs sum_gw;
  std::string model, prompt_path;
  std::size_t chunk_chars = 6000;
  sum_in.add_to(summarize_cmd);
  sum_gw.add_to(summarize_cmd);
  summarize_cmd->add_option("--model", model, "Model identifier")->required();
  summarize_cmd->add_option("--prompt", prompt_path, "Prompt template")->required();
  summarize_cmd->add_option("--chunk-chars", chunk_chars, "Chunk size in bytes");
  summarize_cmd->add_option("--scrub-patterns", patterns_path, "Extraneous-line patterns");
  summarize_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // zeroshot
  auto* zeroshot_cmd = app.add_subcommand("zeroshot", "Zero-shot technique extraction for one report");
  InputArgs zs_in;
  GatewayArgs zs_gw;
  std::size_t word_cap = 500;
  bool no_strict = false;
  zs_in.add_to(zeroshot_cmd);
  zs_gw.add_to(zeroshot_cmd);
  zeroshot_cmd->add_option("--model", model, "Model identifier")->required();
  zeroshot_cmd->add_option("--prompt", prompt_path, "Prompt template")->required();
  zeroshot_cmd->add_option("--catalog", catalog_path, "Technique catalog")->required();
  zeroshot_cmd->add_option("--word-cap", word_cap, "Maximum words per report");
  zeroshot_cmd->add_flag("--no-strict", no_strict, "Send reports above the word cap anyway");
  zeroshot_cmd->add_option("--scrub-patterns", patterns_path, "Extraneous-line patterns");
  zeroshot_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Score sentences and threshold them into document predictions");
  InputArgs cls_in;
  std::string model_path, scoring_endpoint;
  std::vector<double> thresholds;
  cls_in.add_to(classify_cmd);
  auto* mopt = classify_cmd->add_option("--model", model_path, "Baseline model file");
  auto* eopt = classify_cmd->add_option("--endpoint", scoring_endpoint, "Remote scoring service URL");
  mopt->excludes(eopt);
  classify_cmd->add_option("--threshold", thresholds, "Confidence threshold(s)")->required();
  classify_cmd->add_option("--catalog", catalog_path, "Catalog; bounds remote labels to the top 50");
  classify_cmd->add_option("--scrub-patterns", patterns_path, "Extraneous-line patterns");
  classify_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // rebalance
  auto* rebalance_cmd = app.add_subcommand("rebalance", "Plan and apply downsampling and augmentation");
  std::string dataset_path, band_text, plan_out, plan_in, synthetic_path, hist_out;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 5;
  GatewayArgs rb_gw;
  rebalance_cmd->add_option("--dataset", dataset_path, "Sentence dataset (JSON Lines)")->required();
  rebalance_cmd->add_option("--catalog", catalog_path, "Technique catalog")->required();
  rebalance_cmd->add_option("--band", band_text, "low,high (default: median, 2x median)");
  rebalance_cmd->add_option("--seed", seed, "Sampling seed");
  rebalance_cmd->add_option("--max-iterations", max_iterations, "Plan/apply iteration cap");
  rebalance_cmd->add_option("--plan-out", plan_out, "Write the initial plan for review and stop");
  rebalance_cmd->add_option("--plan", plan_in, "Apply a reviewed plan once instead of iterating");
  rebalance_cmd->add_option("--synthetic", synthetic_path, "Pre-generated synthetic sentences (JSON Lines)");
  rebalance_cmd->add_option("--model", model, "Augmentation model (generate through the gateway)");
  rebalance_cmd->add_option("--prompt", prompt_path, "Augmentation prompt template");
  rebalance_cmd->add_option("--fixtures", rb_gw.fixtures, "Replay fixture / response cache directory");
  rebalance_cmd->add_option("--mode", rb_gw.mode, "REPLAY or LIVE");
  rebalance_cmd->add_option("--endpoint", rb_gw.endpoint, "Chat-completion base URL (LIVE)");
  rebalance_cmd->add_option("--histogram-out", hist_out, "Write before/after class counts as CSV");
  rebalance_cmd->add_option("--out", out_path, "Rebalanced dataset (default stdout)");

  // train-baseline
  auto* train_cmd = app.add_subcommand("train-baseline", "Train the TF-IDF one-vs-rest logistic baseline");
  BaselineHyperparams hp;
  std::string loss_out;
  train_cmd->add_option("--dataset", dataset_path, "Sentence dataset (JSON Lines)")->required();
  train_cmd->add_option("--catalog", catalog_path, "Technique catalog")->required();
  train_cmd->add_option("--seed", seed, "Initialization seed");
  train_cmd->add_option("--epochs", hp.epochs, "Gradient-descent epochs");
  train_cmd->add_option("--learning-rate", hp.learning_rate, "Step size");
  train_cmd->add_option("--l2", hp.l2, "L2 penalty");
  train_cmd->add_option("--min-df", hp.min_df, "Minimum document frequency");
  train_cmd->add_option("--max-ngram", hp.max_ngram, "Longest n-gram");
  train_cmd->add_option("--loss-out", loss_out, "Write per-epoch loss as CSV");
  train_cmd->add_option("--out", out_path, "Model file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Recompute metrics from published-style counts and audit them");
  std::string counts_path, reference_path, report_path;
  bool strict = false;
  eval_cmd->add_option("--counts", counts_path, "CSV: model,report,ground_truth,tp,fp,fn");
  eval_cmd->add_option("--reference", reference_path, "CSV: model,precision,recall,f1");
  eval_cmd->add_option("--report", report_path, "Re-audit an evaluation report (report.json)");
  eval_cmd->add_flag("--strict", strict, "Exit with status 4 when the audit finds problems");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run one configuration from a profile");
  std::string profile_path;
  std::vector<std::string> overrides;
  bool quiet = false;
  run_cmd->add_option("--profile", profile_path, "Run profile")->required();
  run_cmd->add_option("--set", overrides, "Override a profile field (key=value)");
  run_cmd->add_flag("--strict", strict, "Fail with status 4 on audit findings");
  run_cmd->add_flag("--quiet", quiet, "Do not print the tables");

  // render
  auto* render_cmd = app.add_subcommand("render", "Render an evaluation report as tables");
  std::string format = "text";
  render_cmd->add_option("--report", report_path, "Evaluation report (report.json)")->required();
  render_cmd->add_option("--format", format, "text, csv or markdown");
  render_cmd->add_option("--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed()) {
      Corpus corpus;
      std::optional<TechniqueCatalog> catalog;
      if (!catalog_path.empty()) catalog = load_catalog(catalog_path);
      const auto scrub_options = scrub_options_from(patterns_path);
      if (corpus_kind == "ATD") {
        if (!catalog) throw UsageError("--catalog is required for ATD corpora");
        corpus = ingest_atd(corpus_dir, *catalog, scrub_options);
      } else if (corpus_kind == "AEL") {
        corpus = ingest_ael(corpus_dir);
      } else {
        throw UsageError("--kind must be AEL or ATD");
      }
      std::set<TechniqueId> top;
      if (top50_only) {
        if (!catalog) throw UsageError("--top50 needs --catalog");
        top = top50_set(*catalog);
      }
      std::string out;
      for (auto r : corpus.reports) {
        if (top50_only) r = restrict_labels(r, top);
        auto labels = ordered_json::array();
        for (const auto& [id, name] : r.truth_labels) labels.push_back(ordered_json{{"technique_id", id.str()}, {"name", name}});
        ordered_json j{{"report_id", r.report_id}, {"source", to_string(r.source)}, {"title", r.title},
                       {"word_count", r.word_count}, {"labels", std::move(labels)},
                       {"labeled_sentences", r.sentence_labels ? ordered_json(r.sentence_labels->size()) : ordered_json(nullptr)},
                       {"labels_emptied", r.labels_emptied}};
        out += j.dump() + "\n";
      }
      emit(out_path, out);
      if (!sentences_out.empty()) io::write_file_atomic(sentences_out, to_jsonl(sentence_dataset(corpus, scrub_options)));
      return 0;
    }

    if (scrub_cmd->parsed()) {
      const auto report = scrub_in.load();
      const auto result = scrub(report.body, scrub_options_from(patterns_path));
      emit(out_path, result.body.empty() || result.body.back() == '\n' ? result.body : result.body + "\n");
      if (!removals_out.empty()) {
        std::string log;
        for (const auto& r : result.removals) {
          log += ordered_json{{"offset", r.offset}, {"reason", to_string(r.reason)}, {"text", r.text}}.dump() + "\n";
        }
        io::write_file_atomic(removals_out, log);
      }
      return 0;
    }

    if (summarize_cmd->parsed()) {
      auto gateway = sum_gw.make();
      SummarizerOptions options;
      options.model = model;
      options.prompt = load_prompt_template(prompt_path);
      options.chunk_chars = chunk_chars;
      const auto scrub_options = scrub_options_from(patterns_path);
      const auto s = summarize_report(clean_of(sum_in.load(), scrub_options), *gateway, options, scrub_options);
      emit(out_path, s.summary + "\n");
      std::fprintf(stderr, "%s: %zu chunk(s), compression %.4f%s\n", s.report_id.c_str(), s.chunks, s.compression_ratio,
                   s.fell_back_to_body ? ", fell back to body" : "");
      return 0;
    }

    if (zeroshot_cmd->parsed()) {
      auto gateway = zs_gw.make();
      const auto catalog = load_catalog(catalog_path);
      ZeroShotOptions options;
      options.prompt = load_prompt_template(prompt_path);
      options.word_cap = word_cap;
      options.strict = !no_strict;
      const auto result =
          extract_techniques(clean_of(zs_in.load(), scrub_options_from(patterns_path)), model, *gateway, catalog, options);
      auto mentions = ordered_json::array();
      for (const auto& m : result.mentions) {
        mentions.push_back(ordered_json{{"surface", m.surface},
                                        {"kind", to_string(m.kind)},
                                        {"technique_id", m.resolved ? ordered_json(m.resolved->str()) : ordered_json(nullptr)}});
      }
      ordered_json j{{"report_id", result.report_id},
                     {"model", result.model},
                     {"mentions", std::move(mentions)},
                     {"predicted", ids_json(result.predicted)}};
      emit(out_path, j.dump(2) + "\n");
      return 0;
    }

    if (classify_cmd->parsed()) {
      std::shared_ptr<SentenceScorer> scorer;
      std::set<TechniqueId> labels;
      if (!catalog_path.empty()) labels = top50_set(load_catalog(catalog_path));
      if (!model_path.empty()) {
        scorer = std::make_shared<BaselineScorer>(std::make_shared<BaselineModel>(load_baseline(model_path)));
      } else if (!scoring_endpoint.empty()) {
        auto remote = std::make_shared<RemoteScorer>(scoring_endpoint, labels);
        remote->check_health();
        scorer = remote;
      } else {
        throw UsageError("one of --model or --endpoint is required");
      }
      const auto report = cls_in.load();
      const auto clean = clean_of(report, scrub_options_from(patterns_path));
      const auto sentences = segment(clean.body, clean.report_id);
      const auto scores = score_sentences(*scorer, sentences);
      auto blocks = ordered_json::array();
      for (double t : thresholds) {
        const auto doc = predict_document(scores, t);
        auto items = ordered_json::array();
        for (const auto& [id, p] : doc.predicted) items.push_back(ordered_json{{"technique_id", id.str()}, {"p", p}});
        blocks.push_back(ordered_json{{"threshold", t}, {"predicted", std::move(items)}});
      }
      ordered_json j{{"report_id", report.report_id}, {"sentences", sentences.size()}, {"predictions", std::move(blocks)}};
      emit(out_path, j.dump(2) + "\n");
      return 0;
    }

    if (rebalance_cmd->parsed()) {
      const auto catalog = load_catalog(catalog_path);
      const auto top = top50_set(catalog);
      const auto dataset = load_dataset(dataset_path);
      auto hist = class_histogram(dataset);
      for (const auto& id : top) hist.try_emplace(id, 0);

      Band band;
      if (band_text.empty()) {
        band = default_band(hist);
      } else {
        const auto comma = band_text.find(',');
        if (comma == std::string::npos) throw UsageError("--band expects low,high");
        try {
          band = {std::stoul(band_text.substr(0, comma)), std::stoul(band_text.substr(comma + 1))};
        } catch (const std::exception&) {
          throw UsageError("--band expects two integers, got '" + band_text + "'");
        }
      }

      const auto plan = plan_in.empty() ? build_plan(hist, band, seed) : import_plan(io::read_text_file(plan_in), plan_in);
      if (!plan_out.empty()) {
        io::write_file_atomic(plan_out, export_plan(plan));
        return 0;
      }

      std::vector<LabeledSentence> synthetic;
      if (!synthetic_path.empty()) {
        synthetic = load_dataset(synthetic_path).sentences;
      } else if (!model.empty()) {
        if (prompt_path.empty() || rb_gw.fixtures.empty()) throw UsageError("generation needs --prompt and --fixtures");
        AugmentOptions ao;
        ao.model = model;
        ao.prompt = load_prompt_template(prompt_path);
        auto gateway = rb_gw.make();
        synthetic = generate_synthetic(dataset, plan, catalog, *gateway, ao);
      }

      LabeledDataset result;
      ClassHistogram after;
      if (!plan_in.empty()) {
        ApplyReport rep;
        result = apply_plan(dataset, plan, synthetic, top, &rep);
        for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        after = class_histogram(result);
      } else {
        RebalanceOptions ro;
        ro.band = band;
        ro.seed = seed;
        ro.max_iterations = max_iterations;
        ro.label_space = top;
        auto outcome = rebalance(dataset, synthetic, top, ro);
        for (const auto& w : outcome.totals.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        for (const auto& r : outcome.residual) std::fprintf(stderr, "residual: %s\n", r.c_str());
        result = std::move(outcome.dataset);
        after = std::move(outcome.after);
      }
      if (!hist_out.empty()) io::write_file_atomic(hist_out, histogram_text(hist, after));
      emit(out_path, to_jsonl(result));
      return 0;
    }

    if (train_cmd->parsed()) {
      const auto catalog = load_catalog(catalog_path);
      TrainingLog log;
      const auto model_out = train_baseline(load_dataset(dataset_path), top50_set(catalog), seed, hp, &log);
      io::write_file_atomic(out_path, model_out.serialize());
      for (const auto& id : log.untrained) std::fprintf(stderr, "warning: %s has no positive example\n", id.str().c_str());
      if (!loss_out.empty()) {
        std::string csv = "epoch,loss\n";
        for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
          csv += std::to_string(e) + "," + format_fixed(log.epoch_loss[e], 12) + "\n";
        }
        io::write_file_atomic(loss_out, csv);
      }
      if (!log.epoch_loss.empty()) {
        std::printf("trained %zu labels, %zu features; loss %.6f -> %.6f\n", model_out.labels().size(),
                    model_out.vectorizer().size(), log.epoch_loss.front(), log.epoch_loss.back());
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      if (counts_path.empty() == report_path.empty()) throw UsageError("give exactly one of --counts or --report");
      bool findings = false;
      if (!report_path.empty()) {
        const auto report = eval_report_from_json(io::read_text_file(report_path), report_path);
        for (const auto& a : audit_report(report)) {
          std::printf("AUDIT %s\n", a.c_str());
          findings = true;
        }
        if (!findings) std::printf("audit clean: %zu block(s)\n", report.blocks.size());
      } else {
        const auto rows = parse_counts_csv(io::read_text_file(counts_path), counts_path);
        std::map<std::string, EvalMetrics> reference;
        if (!reference_path.empty()) reference = parse_reference_csv(io::read_text_file(reference_path), reference_path);
        for (const auto& f : audit_counts(rows)) {
          std::printf("AUDIT %s / %s: %s\n", f.model.c_str(), f.report.c_str(), f.message.c_str());
          findings = true;
        }
        for (const auto& c : reproduction_claims(rows, reference)) {
          std::printf("%s | %s | %s | %s | %s\n", c.model.c_str(), format_fixed(c.derived.precision, 4).c_str(),
                      format_fixed(c.derived.recall, 4).c_str(), format_fixed(c.derived.f1, 4).c_str(),
                      std::string(to_string(c.status)).c_str());
          for (const auto& n : c.notes) std::printf("  %s\n", n.c_str());
        }
      }
      if (strict && findings) return static_cast<int>(ErrorKind::Audit);
      return 0;
    }

    if (run_cmd->parsed()) {
      auto profile = load_profile(profile_path, overrides);
      if (strict) profile.strict_audit = true;
      const auto report = run_profile(profile);
      if (!quiet) {
        const auto text = render_tables(report, TableFormat::Text);
        std::fwrite(text.data(), 1, text.size(), stdout);
      }
      return 0;
    }

    if (render_cmd->parsed()) {
      const auto report = eval_report_from_json(io::read_text_file(report_path), report_path);
      emit(out_path, render_tables(report, parse_table_format(format)));
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ErrorKind::Data);
  }
  return 1;
}
