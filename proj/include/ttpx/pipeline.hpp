#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/corpus.hpp"
#include "ttpx/llm_gateway.hpp"
#include "ttpx/metrics.hpp"

namespace ttpx {

enum class ConfigKind { Cfg1Zeroshot, Cfg2Classify, Cfg3SummarizeClassify, Cfg4Rebalanced };

std::string_view to_string(ConfigKind kind) noexcept;
ConfigKind parse_config_kind(std::string_view text);

enum class Backend { Baseline, Remote };

std::string_view to_string(Backend backend) noexcept;

// `key = value` lines; '#' starts a comment. Relative paths resolve against
// the profile's directory. Lists are comma-separated.
struct RunProfile {
  std::string name;
  ConfigKind config = ConfigKind::Cfg1Zeroshot;
  std::filesystem::path corpus;
  ReportSource corpus_kind = ReportSource::AEL;
  std::filesystem::path catalog;
  std::optional<std::filesystem::path> scrub_patterns;
  std::filesystem::path output;

  // LLM stages
  std::vector<std::string> models;  // CFG1: one block per model
  std::string summary_model;        // CFG3/4
  std::string augment_model;        // CFG4
  GatewayMode gateway_mode = GatewayMode::Replay;
  std::filesystem::path fixtures;
  std::string llm_endpoint;
  std::optional<std::filesystem::path> zeroshot_prompt;
  std::optional<std::filesystem::path> summary_prompt;
  std::optional<std::filesystem::path> augment_prompt;
  std::size_t max_words = 0;  // 0 = no corpus filter
  std::size_t summary_chunk_chars = 6000;

  // Classification stages
  std::vector<double> thresholds;
  Backend backend = Backend::Baseline;
  std::optional<std::filesystem::path> baseline_model;  // pretrained; otherwise trained from training_set
  std::optional<std::filesystem::path> training_set;
  std::string scoring_endpoint;
  int epochs = 200;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  std::size_t min_df = 2;

  // Rebalancing
  std::optional<std::size_t> band_low;
  std::optional<std::size_t> band_high;
  std::size_t max_iterations = 5;

  MatchMode match_mode = MatchMode::NameOrId;
  bool lenient_parent = false;
  bool restrict_top50 = true;
  bool strict_audit = false;
  std::uint64_t seed = 0;
  std::size_t workers = 4;

  // key/value pairs as written (after overrides), for the report echo.
  std::vector<std::pair<std::string, std::string>> echo;
};

// Applies `overrides` (key=value) on top of the file, then validates.
RunProfile parse_profile(std::string_view content, const std::filesystem::path& base_dir,
                         const std::vector<std::string>& overrides = {}, std::string_view origin = "<profile>");
RunProfile load_profile(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Throws UsageError on missing or contradictory fields.
void validate_profile(const RunProfile& profile);

struct ReportRow {
  std::string report_id;
  std::size_t ground_truth = 0;
  EvalCounts counts;
  EvalMetrics metrics;
};

struct TechniqueRow {
  TechniqueId id;
  EvalCounts counts;
  EvalMetrics metrics;
  std::size_t support = 0;
};

// One evaluated variant: a model (CFG1) or a threshold (CFG2-4).
struct EvalBlock {
  std::string label;
  std::string model;
  std::optional<double> threshold;
  std::vector<ReportRow> reports;
  std::optional<EvalMetrics> macro;  // absent when there are no reports
  std::vector<TechniqueRow> per_technique;
};

struct EvalReport {
  std::string profile_name;
  ConfigKind config = ConfigKind::Cfg1Zeroshot;
  MatchMode match_mode = MatchMode::NameOrId;
  std::vector<std::pair<std::string, std::string>> profile_echo;
  std::vector<EvalBlock> blocks;
  std::vector<std::string> flags;     // e.g. "baseline substitution"
  std::vector<std::string> skipped;   // reports filtered out, with reason
  std::vector<std::string> warnings;
  std::vector<std::string> audit;     // consistency findings
};

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(std::string_view text, std::string_view origin = "<report>");

// Recomputes each block's macro row from its report rows and checks the
// bookkeeping identities; returns human-readable findings.
std::vector<std::string> audit_report(const EvalReport& report);

enum class TableFormat { Text, Csv, Markdown };

TableFormat parse_table_format(std::string_view text);

// "-FN / +FP"; a zero side renders as "0".
std::string count_cell(std::size_t fn, std::size_t fp);

std::string render_tables(const EvalReport& report, TableFormat format);

// Runs one configuration end to end and writes every artifact under
// profile.output. In strict mode a non-empty audit raises AuditError after
// the artifacts are written. `transport` replaces the HTTP transport in LIVE
// mode (fixture recording, tests).
EvalReport run_profile(const RunProfile& profile, std::shared_ptr<LlmTransport> transport = nullptr);

}  // namespace ttpx
