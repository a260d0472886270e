#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/catalog.hpp"

namespace ttpx {

enum class Provenance { Original, Synthetic };

std::string_view to_string(Provenance provenance) noexcept;

struct LabeledSentence {
  std::string sentence_id;
  std::string report_id;
  std::string text;
  std::set<TechniqueId> labels;
  Provenance provenance = Provenance::Original;

  bool operator==(const LabeledSentence&) const = default;
};

// Sentence-level training/evaluation data. Sentence IDs are unique.
struct LabeledDataset {
  std::vector<LabeledSentence> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
};

// Throws DataError on duplicate sentence IDs.
void validate_unique_ids(const LabeledDataset& dataset);

// JSON Lines: {"sentence_id","report_id","text","labels":[...],"provenance"}.
std::string to_jsonl(const LabeledDataset& dataset);
LabeledDataset dataset_from_jsonl(std::string_view content, std::string_view origin = "<dataset>");
LabeledDataset load_dataset(const std::filesystem::path& path);

// Lowercase, alphanumeric tokens joined by single spaces; used for dedup.
std::string normalize_for_dedup(std::string_view text);

}  // namespace ttpx
