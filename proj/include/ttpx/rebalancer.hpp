#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/dataset.hpp"
#include "ttpx/llm_gateway.hpp"
#include "ttpx/prompt.hpp"
#include "ttpx/textprep.hpp"

namespace ttpx {

using ClassHistogram = std::map<TechniqueId, std::size_t>;

ClassHistogram class_histogram(const LabeledDataset& dataset);

struct Band {
  std::size_t low = 0;
  std::size_t high = 0;

  bool operator==(const Band&) const = default;
};

// low = median class count (lower median), high = 2 * low.
Band default_band(const ClassHistogram& hist);

struct RebalancePlan {
  Band band;
  std::map<TechniqueId, std::size_t> downsample;  // class -> keep count
  std::map<TechniqueId, std::size_t> augment;     // class -> sentences to add
  std::uint64_t seed = 0;

  bool empty() const noexcept { return downsample.empty() && augment.empty(); }
  bool operator==(const RebalancePlan&) const = default;
};

// Above high -> keep high; below low -> add (low - count). Throws UsageError
// unless 0 < low <= high.
RebalancePlan build_plan(const ClassHistogram& hist, Band band, std::uint64_t seed);

// Review format, one directive per line:
//   band <low> <high>
//   seed <n>
//   downsample <ID> <keep>
//   augment <ID> <count>
std::string export_plan(const RebalancePlan& plan);
RebalancePlan import_plan(std::string_view text, std::string_view origin = "<plan>");

struct ApplyReport {
  std::size_t removed = 0;
  std::size_t added = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;
};

// Downsamples by seeded uniform sampling, never touching sentences that carry
// a class at or below low, then inserts deduplicated synthetic sentences for
// augment targets, never raising a class that is already at or above low.
// Synthetic labels outside `allowed` are a DataError.
LabeledDataset apply_plan(const LabeledDataset& dataset, const RebalancePlan& plan,
                          const std::vector<LabeledSentence>& synthetic, const std::set<TechniqueId>& allowed,
                          ApplyReport* report = nullptr, const ScrubOptions& scrub_options = ScrubOptions::defaults());

struct RebalanceOutcome {
  LabeledDataset dataset;
  std::vector<RebalancePlan> plans;  // one per iteration that changed something
  ApplyReport totals;
  ClassHistogram before;
  ClassHistogram after;
  std::vector<std::string> residual;  // classes still outside the band
};

struct RebalanceOptions {
  Band band;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 5;
  // Classes counted even when absent from the dataset (count 0).
  std::set<TechniqueId> label_space;
};

// plan -> apply -> re-histogram until every class is in band or the
// iteration cap is reached.
RebalanceOutcome rebalance(const LabeledDataset& dataset, const std::vector<LabeledSentence>& synthetic_pool,
                           const std::set<TechniqueId>& allowed, const RebalanceOptions& options);

struct AugmentOptions {
  std::string model;
  PromptTemplate prompt;  // placeholders: {{count}}, {{technique_name}}, {{exemplars}}
  std::size_t exemplars = 3;
  double temperature = 0.7;
  int max_tokens = 1024;
};

// Seeded choice of up to `options.exemplars` sentences carrying `id`.
std::vector<std::string> pick_exemplars(const LabeledDataset& dataset, const TechniqueId& id, std::size_t count,
                                        std::uint64_t seed);

LlmRequest augmentation_request(const Technique& technique, std::size_t count, const std::vector<std::string>& exemplars,
                                const AugmentOptions& options);

// One sentence per non-empty line; list markers and wrapping quotes removed,
// lead-in lines ending in ':' skipped.
std::vector<std::string> parse_generated_sentences(std::string_view text);

// One request per augment target. Sentence IDs are "syn:<ID>:<n>".
std::vector<LabeledSentence> generate_synthetic(const LabeledDataset& dataset, const RebalancePlan& plan,
                                                const TechniqueCatalog& catalog, LlmGateway& gateway,
                                                const AugmentOptions& options);

}  // namespace ttpx
