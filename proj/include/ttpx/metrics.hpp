#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/dataset.hpp"

namespace ttpx {

enum class MatchMode { NameOrId, NameAndId };

std::string_view to_string(MatchMode mode) noexcept;
MatchMode parse_match_mode(std::string_view text);

// A predicted or annotated technique. Unresolved predictions carry no ID.
struct TechniqueRef {
  std::optional<TechniqueId> id;
  std::string name;
};

struct EvalCounts {
  std::string report_id;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MatchOptions {
  MatchMode mode = MatchMode::NameOrId;
  // T1566.001 also matches T1566 (either direction). Off by default.
  bool lenient_parent = false;
};

// Maximum one-to-one matching between predictions and truth; duplicates
// (same ID and normalized name) collapse first.
EvalCounts match_counts(const std::vector<TechniqueRef>& predicted, const std::vector<TechniqueRef>& truth,
                        const MatchOptions& options);

// 0/0 yields 0.
EvalMetrics prf(const EvalCounts& counts);

// Field-wise mean. Throws UsageError on an empty list.
EvalMetrics macro_average(const std::vector<EvalMetrics>& items);

struct TechniqueScore {
  EvalMetrics metrics;
  EvalCounts counts;
  std::size_t support = 0;
};

// Sentence-aligned multi-label sets; both vectors must have equal length.
std::map<TechniqueId, TechniqueScore> per_technique_metrics(const std::vector<std::set<TechniqueId>>& predicted,
                                                           const std::vector<std::set<TechniqueId>>& truth);

struct Fold {
  LabeledDataset train;
  LabeledDataset test;
};

// Iterative stratification, rarest label first; deterministic given seed.
std::vector<Fold> kfold_split(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed);

// Fold index per sentence, for callers that need the raw assignment.
std::vector<std::size_t> kfold_assign(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed);

// Published-style counts, one row per (model, report).
struct CountsRow {
  std::string model;
  std::string report;
  std::size_t ground_truth = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// CSV with header model,report,ground_truth,tp,fp,fn.
std::vector<CountsRow> parse_counts_csv(std::string_view content, std::string_view origin = "<counts>");

struct AuditFinding {
  std::string model;
  std::string report;
  std::string message;
};

// tp + fn must equal the ground-truth size.
std::vector<AuditFinding> audit_counts(const std::vector<CountsRow>& rows);

enum class ClaimStatus { Reproduced, Mismatch, Withheld, NoReference };

std::string_view to_string(ClaimStatus status) noexcept;

struct ReproductionClaim {
  std::string model;
  EvalMetrics derived;
  std::optional<EvalMetrics> reference;
  ClaimStatus status = ClaimStatus::NoReference;
  std::vector<std::string> notes;
};

struct ClaimTolerance {
  int pr_decimals = 4;        // P and R must agree after rounding to this many places
  double f1_tolerance = 1e-3;
};

// CSV with header model,precision,recall,f1.
std::map<std::string, EvalMetrics> parse_reference_csv(std::string_view content, std::string_view origin = "<reference>");

// Per model, in first-appearance order. Models with audit findings are withheld.
std::vector<ReproductionClaim> reproduction_claims(const std::vector<CountsRow>& rows,
                                                   const std::map<std::string, EvalMetrics>& reference,
                                                   const ClaimTolerance& tolerance = {});

// printf("%.*f") of the value; used for every rendered metric.
std::string format_fixed(double value, int decimals);

}  // namespace ttpx
