#include <algorithm>
#include <exception>
#include <memory>

#include <json.hpp>

#include "omp_compat.hpp"
#include "ttpx/classifier.hpp"
#include "ttpx/corpus.hpp"
#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/pipeline.hpp"
#include "ttpx/rebalancer.hpp"
#include "ttpx/summarizer.hpp"
#include "ttpx/zeroshot.hpp"

namespace ttpx {

using ordered_json = nlohmann::ordered_json;

namespace {

// Artifacts are collected in memory and written once, in name order.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_[name] = std::move(content); }

  void flush() const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory " + dir_.string() + ": " + ec.message());
    for (const auto& [name, content] : files_) io::write_file_atomic(dir_ / name, content);
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first failure
// (by index) is rethrown.
template <typename Fn>
void parallel_each(std::size_t n, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min(workers, n)));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_threshold(double t) {
  auto s = format_fixed(t, 4);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

struct Inputs {
  TechniqueCatalog catalog;
  ScrubOptions scrub_options = ScrubOptions::defaults();
  std::set<TechniqueId> top50;
  std::vector<RawReport> reports;
  std::vector<CleanReport> clean;
};

Inputs load_inputs(const RunProfile& p, EvalReport& report) {
  Inputs in;
  in.catalog = load_catalog(p.catalog);
  if (p.scrub_patterns) in.scrub_options = ScrubOptions::load(*p.scrub_patterns);
  in.top50 = top50_set(in.catalog);

  Corpus corpus = p.corpus_kind == ReportSource::ATD ? ingest_atd(p.corpus, in.catalog, in.scrub_options) : ingest_ael(p.corpus);
  if (corpus.reports.empty()) throw DataError("corpus " + p.corpus.string() + " has no reports");

  for (auto& r : corpus.reports) {
    for (const auto& [id, name] : r.truth_labels) {
      if (!in.catalog.find(id)) throw DataError("report '" + r.report_id + "' cites " + id.str() + ", which is not in the catalog");
    }
    if (p.max_words > 0 && r.word_count > p.max_words) {
      report.skipped.push_back(r.report_id + ": " + std::to_string(r.word_count) + " words exceeds max_words " +
                               std::to_string(p.max_words));
      continue;
    }
    if (p.restrict_top50) {
      r = restrict_labels(r, in.top50);
      if (r.labels_emptied) report.warnings.push_back(r.report_id + ": no ground-truth label survives the top-50 restriction");
    }
    auto scrubbed = scrub(r.body, in.scrub_options);
    in.clean.push_back(CleanReport{r.report_id, std::move(scrubbed.body), std::move(scrubbed.removals)});
    in.reports.push_back(std::move(r));
  }
  return in;
}

std::vector<TechniqueRef> truth_refs(const RawReport& r) {
  std::vector<TechniqueRef> out;
  for (const auto& [id, name] : r.truth_labels) out.push_back({id, name});
  return out;
}

TechniqueRef catalog_ref(const TechniqueCatalog& catalog, const TechniqueId& id) {
  const Technique* t = catalog.find(id);
  return {id, t ? t->name : std::string()};
}

ReportRow make_row(const RawReport& r, const std::vector<TechniqueRef>& predicted, const RunProfile& p) {
  ReportRow row;
  row.report_id = r.report_id;
  row.ground_truth = r.truth_labels.size();
  row.counts = match_counts(predicted, truth_refs(r), MatchOptions{p.match_mode, p.lenient_parent});
  row.counts.report_id = r.report_id;
  row.metrics = prf(row.counts);
  return row;
}

void finish_block(EvalBlock& block) {
  std::vector<EvalMetrics> rows;
  for (const auto& r : block.reports) rows.push_back(r.metrics);
  if (!rows.empty()) block.macro = macro_average(rows);
}

std::unique_ptr<LlmGateway> make_gateway(const RunProfile& p, std::shared_ptr<LlmTransport> transport) {
  GatewayOptions options;
  options.mode = p.gateway_mode;
  options.max_in_flight = p.workers;
  if (p.gateway_mode == GatewayMode::Live && !transport) transport = make_http_transport(p.llm_endpoint);
  return std::make_unique<LlmGateway>(options, FixtureStore(p.fixtures), transport);
}

std::string jsonl(const std::vector<ordered_json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

ordered_json ids_json(const std::set<TechniqueId>& ids) {
  auto a = ordered_json::array();
  for (const auto& id : ids) a.push_back(id.str());
  return a;
}

// ---- CFG1 ----

void run_zeroshot(const RunProfile& p, const Inputs& in, EvalReport& report, OutputWriter& out,
                  const std::shared_ptr<LlmTransport>& transport) {
  ZeroShotOptions options;
  options.prompt = load_prompt_template(*p.zeroshot_prompt);
  if (p.max_words > 0) options.word_cap = p.max_words;
  auto gateway = make_gateway(p, transport);

  std::vector<ordered_json> lines;
  for (const auto& model : p.models) {
    std::vector<ExtractionResult> results(in.clean.size());
    parallel_each(in.clean.size(), p.workers, [&](std::size_t i) {
      results[i] = extract_techniques(in.clean[i], model, *gateway, in.catalog, options);
    });

    EvalBlock block;
    block.label = model;
    block.model = model;
    for (std::size_t i = 0; i < results.size(); ++i) {
      std::vector<TechniqueRef> predicted;
      auto mentions = ordered_json::array();
      for (const auto& m : results[i].mentions) {
        predicted.push_back(m.resolved ? catalog_ref(in.catalog, *m.resolved) : TechniqueRef{std::nullopt, m.surface});
        mentions.push_back(ordered_json{{"surface", m.surface},
                                        {"kind", to_string(m.kind)},
                                        {"technique_id", m.resolved ? ordered_json(m.resolved->str()) : ordered_json(nullptr)}});
      }
      block.reports.push_back(make_row(in.reports[i], predicted, p));
      lines.push_back(ordered_json{{"model", model},
                                   {"report_id", results[i].report_id},
                                   {"mentions", std::move(mentions)},
                                   {"predicted", ids_json(results[i].predicted)}});
    }
    finish_block(block);
    report.blocks.push_back(std::move(block));
  }
  out.add("extractions.jsonl", jsonl(lines));
}

// ---- CFG2-4 ----

std::shared_ptr<SentenceScorer> baseline_scorer(const LabeledDataset& training, const RunProfile& p, const Inputs& in,
                                                EvalReport& report, OutputWriter& out) {
  BaselineHyperparams hp;
  hp.epochs = p.epochs;
  hp.learning_rate = p.learning_rate;
  hp.l2 = p.l2;
  hp.min_df = p.min_df;
  TrainingLog log;
  auto model = std::make_shared<BaselineModel>(train_baseline(training, in.top50, p.seed, hp, &log));
  if (!log.untrained.empty()) {
    std::string ids;
    for (const auto& id : log.untrained) ids += (ids.empty() ? "" : ", ") + id.str();
    report.warnings.push_back(std::to_string(log.untrained.size()) + " classes have no training sentence and score 0: " + ids);
  }
  out.add("baseline_model.json", model->serialize());
  std::string losses;
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
    losses += std::to_string(e) + "," + format_fixed(log.epoch_loss[e], 12) + "\n";
  }
  out.add("training_loss.csv", "epoch,loss\n" + losses);
  return std::make_shared<BaselineScorer>(std::move(model));
}

LabeledDataset load_training_set(const RunProfile& p, const Inputs& in) {
  auto training = load_dataset(*p.training_set);
  validate_unique_ids(training);
  for (const auto& s : training.sentences) {
    if (s.labels.empty()) throw DataError("training sentence '" + s.sentence_id + "' has no labels");
    for (const auto& id : s.labels) {
      if (!in.top50.contains(id)) {
        throw DataError("training sentence '" + s.sentence_id + "' has label " + id.str() + " outside the top-50 set");
      }
    }
  }
  return training;
}

std::shared_ptr<SentenceScorer> make_scorer(const RunProfile& p, const Inputs& in, const LabeledDataset* training,
                                            EvalReport& report, OutputWriter& out) {
  if (p.backend == Backend::Remote) {
    auto scorer = std::make_shared<RemoteScorer>(p.scoring_endpoint, in.top50);
    scorer->check_health();
    return scorer;
  }
  if (p.baseline_model) {
    auto model = std::make_shared<BaselineModel>(load_baseline(*p.baseline_model));
    for (const auto& id : model->labels()) {
      if (!in.top50.contains(id)) throw DataError("baseline model label " + id.str() + " is outside the top-50 set");
    }
    return std::make_shared<BaselineScorer>(std::move(model));
  }
  return baseline_scorer(*training, p, in, report, out);
}

struct ScoredReport {
  std::vector<Sentence> sentences;
  std::vector<ScoreVector> scores;
};

std::vector<ScoredReport> score_texts(const std::vector<std::pair<std::string, std::string>>& texts,
                                      const SentenceScorer& scorer, std::size_t workers) {
  std::vector<ScoredReport> out(texts.size());
  parallel_each(texts.size(), workers, [&](std::size_t i) {
    out[i].sentences = segment(texts[i].second, texts[i].first);
    out[i].scores = score_sentences(scorer, out[i].sentences);
  });
  return out;
}

std::vector<TechniqueRow> sentence_metrics(const Inputs& in, const std::vector<ScoredReport>& scored, double threshold,
                                           const RunProfile& p) {
  std::vector<std::set<TechniqueId>> predicted;
  std::vector<std::set<TechniqueId>> truth;
  for (std::size_t i = 0; i < in.reports.size(); ++i) {
    const auto& r = in.reports[i];
    if (!r.sentence_labels) continue;
    std::map<std::size_t, std::set<TechniqueId>> by_index;
    for (const auto& s : *r.sentence_labels) by_index[s.index].insert(s.labels.begin(), s.labels.end());
    for (std::size_t k = 0; k < scored[i].scores.size(); ++k) {
      predicted.push_back(predict_sentence(scored[i].scores[k], threshold));
      std::set<TechniqueId> t;
      if (auto it = by_index.find(k); it != by_index.end()) {
        for (const auto& id : it->second) {
          if (!p.restrict_top50 || in.top50.contains(id)) t.insert(id);
        }
      }
      truth.push_back(std::move(t));
    }
  }
  std::vector<TechniqueRow> rows;
  for (const auto& [id, s] : per_technique_metrics(predicted, truth)) rows.push_back({id, s.counts, s.metrics, s.support});
  return rows;
}

void classify_blocks(const RunProfile& p, const Inputs& in, const std::vector<ScoredReport>& scored,
                     const std::vector<ScoredReport>* sentence_level, EvalReport& report, OutputWriter& out) {
  std::vector<ordered_json> lines;
  for (double t : p.thresholds) {
    EvalBlock block;
    block.label = "threshold " + format_threshold(t);
    block.model = p.backend == Backend::Remote ? "remote" : "baseline";
    block.threshold = t;
    for (std::size_t i = 0; i < in.reports.size(); ++i) {
      const auto doc = predict_document(scored[i].scores, t);
      std::vector<TechniqueRef> predicted;
      auto items = ordered_json::array();
      for (const auto& [id, conf] : doc.predicted) {
        predicted.push_back(catalog_ref(in.catalog, id));
        items.push_back(ordered_json{{"technique_id", id.str()}, {"p", conf}});
      }
      block.reports.push_back(make_row(in.reports[i], predicted, p));
      lines.push_back(ordered_json{{"threshold", t},
                                   {"report_id", in.reports[i].report_id},
                                   {"sentences", scored[i].sentences.size()},
                                   {"predicted", std::move(items)}});
    }
    if (sentence_level != nullptr) block.per_technique = sentence_metrics(in, *sentence_level, t, p);
    finish_block(block);
    report.blocks.push_back(std::move(block));
  }
  out.add("predictions.jsonl", jsonl(lines));
}

bool has_sentence_truth(const Inputs& in) {
  return std::any_of(in.reports.begin(), in.reports.end(), [](const RawReport& r) { return r.sentence_labels.has_value(); });
}

std::vector<std::pair<std::string, std::string>> clean_texts(const Inputs& in) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& c : in.clean) out.emplace_back(c.report_id, c.body);
  return out;
}

std::vector<std::pair<std::string, std::string>> summarize_all(const RunProfile& p, const Inputs& in, LlmGateway& gateway,
                                                               OutputWriter& out) {
  SummarizerOptions options;
  options.model = p.summary_model;
  options.prompt = load_prompt_template(*p.summary_prompt);
  options.chunk_chars = p.summary_chunk_chars;

  std::vector<SummarisedReport> summaries(in.clean.size());
  parallel_each(in.clean.size(), p.workers, [&](std::size_t i) {
    summaries[i] = summarize_report(in.clean[i], gateway, options, in.scrub_options);
  });

  std::vector<ordered_json> lines;
  std::vector<std::pair<std::string, std::string>> texts;
  for (const auto& s : summaries) {
    lines.push_back(ordered_json{{"report_id", s.report_id},
                                 {"chunks", s.chunks},
                                 {"compression_ratio", s.compression_ratio},
                                 {"fell_back_to_body", s.fell_back_to_body},
                                 {"summary", s.summary}});
    texts.emplace_back(s.report_id, s.summary);
  }
  out.add("summaries.jsonl", jsonl(lines));
  return texts;
}

void run_classify(const RunProfile& p, const Inputs& in, EvalReport& report, OutputWriter& out) {
  std::optional<LabeledDataset> training;
  if (p.backend == Backend::Baseline && !p.baseline_model) training = load_training_set(p, in);
  auto scorer = make_scorer(p, in, training ? &*training : nullptr, report, out);
  const auto scored = score_texts(clean_texts(in), *scorer, p.workers);
  classify_blocks(p, in, scored, has_sentence_truth(in) ? &scored : nullptr, report, out);
}

void run_summarize_classify(const RunProfile& p, const Inputs& in, EvalReport& report, OutputWriter& out,
                            const std::shared_ptr<LlmTransport>& transport) {
  auto gateway = make_gateway(p, transport);
  std::optional<LabeledDataset> training;
  if (p.backend == Backend::Baseline && !p.baseline_model) training = load_training_set(p, in);
  auto scorer = make_scorer(p, in, training ? &*training : nullptr, report, out);
  const auto summaries = summarize_all(p, in, *gateway, out);
  const auto scored = score_texts(summaries, *scorer, p.workers);
  classify_blocks(p, in, scored, nullptr, report, out);
}

void run_rebalanced(const RunProfile& p, const Inputs& in, EvalReport& report, OutputWriter& out,
                    const std::shared_ptr<LlmTransport>& transport) {
  auto gateway = make_gateway(p, transport);
  const auto training = load_training_set(p, in);

  RebalanceOptions ro;
  ro.seed = p.seed;
  ro.max_iterations = p.max_iterations;
  ro.label_space = in.top50;
  auto hist = class_histogram(training);
  for (const auto& id : in.top50) hist.try_emplace(id, 0);
  ro.band = p.band_low ? Band{*p.band_low, *p.band_high} : default_band(hist);

  const auto initial = build_plan(hist, ro.band, p.seed);
  AugmentOptions ao;
  ao.model = p.augment_model;
  ao.prompt = load_prompt_template(*p.augment_prompt);
  const auto pool = generate_synthetic(training, initial, in.catalog, *gateway, ao);
  const auto outcome = rebalance(training, pool, in.top50, ro);

  std::string plans;
  for (const auto& plan : outcome.plans) plans += export_plan(plan) + "\n";
  out.add("rebalance_plan.txt", export_plan(initial));
  out.add("rebalance_iterations.txt", plans);
  out.add("rebalanced.jsonl", to_jsonl(outcome.dataset));
  LabeledDataset synthetic_export;
  synthetic_export.sentences = pool;
  out.add("synthetic.jsonl", to_jsonl(synthetic_export));

  std::string hist_csv = "technique_id,before,after\n";
  for (const auto& [id, n] : outcome.after) {
    const auto it = outcome.before.find(id);
    hist_csv += id.str() + "," + std::to_string(it == outcome.before.end() ? 0 : it->second) + "," + std::to_string(n) + "\n";
  }
  out.add("histogram.csv", hist_csv);
  for (const auto& w : outcome.totals.warnings) report.warnings.push_back("rebalance: " + w);
  for (const auto& r : outcome.residual) report.audit.push_back("rebalance residual: " + r);

  if (p.backend == Backend::Baseline) report.flags.push_back("baseline substitution");
  auto scorer = make_scorer(p, in, &outcome.dataset, report, out);
  const auto summaries = summarize_all(p, in, *gateway, out);
  const auto scored = score_texts(summaries, *scorer, p.workers);
  std::optional<std::vector<ScoredReport>> original;
  if (has_sentence_truth(in)) original = score_texts(clean_texts(in), *scorer, p.workers);
  classify_blocks(p, in, scored, original ? &*original : nullptr, report, out);
}

std::string echo_text(const RunProfile& p) {
  std::string s;
  for (const auto& [k, v] : p.echo) s += k + " = " + v + "\n";
  return s;
}

}  // namespace

EvalReport run_profile(const RunProfile& profile, std::shared_ptr<LlmTransport> transport) {
  validate_profile(profile);
  EvalReport report;
  report.profile_name = profile.name;
  report.config = profile.config;
  report.match_mode = profile.match_mode;
  report.profile_echo = profile.echo;

  OutputWriter out(profile.output);
  const auto inputs = load_inputs(profile, report);

  switch (profile.config) {
    case ConfigKind::Cfg1Zeroshot: run_zeroshot(profile, inputs, report, out, transport); break;
    case ConfigKind::Cfg2Classify: run_classify(profile, inputs, report, out); break;
    case ConfigKind::Cfg3SummarizeClassify: run_summarize_classify(profile, inputs, report, out, transport); break;
    case ConfigKind::Cfg4Rebalanced: run_rebalanced(profile, inputs, report, out, transport); break;
  }

  for (auto& finding : audit_report(report)) report.audit.push_back(std::move(finding));

  std::vector<ordered_json> counts;
  for (const auto& b : report.blocks) {
    for (const auto& r : b.reports) {
      counts.push_back(ordered_json{{"block", b.label},       {"report_id", r.report_id}, {"ground_truth", r.ground_truth},
                                    {"tp", r.counts.tp},      {"fp", r.counts.fp},        {"fn", r.counts.fn},
                                    {"precision", r.metrics.precision}, {"recall", r.metrics.recall}, {"f1", r.metrics.f1}});
    }
  }
  out.add("counts.jsonl", jsonl(counts));
  out.add("profile.txt", echo_text(profile));
  out.add("report.json", eval_report_to_json(report));
  out.add("tables.txt", render_tables(report, TableFormat::Text));
  out.add("tables.md", render_tables(report, TableFormat::Markdown));
  out.add("tables.csv", render_tables(report, TableFormat::Csv));
  out.flush();

  if (profile.strict_audit && !report.audit.empty()) {
    std::string msg = "audit failed for profile '" + profile.name + "':";
    for (const auto& a : report.audit) msg += "\n  " + a;
    throw AuditError(msg);
  }
  return report;
}

}  // namespace ttpx
