#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/dataset.hpp"
#include "ttpx/textprep.hpp"

namespace ttpx {

enum class ReportSource { AEL, ATD, OTHER };

std::string_view to_string(ReportSource source) noexcept;

struct SentenceLabel {
  std::size_t index = 0;  // position in segment(scrub(body))
  std::string text;
  std::set<TechniqueId> labels;
};

struct RawReport {
  std::string report_id;
  ReportSource source = ReportSource::OTHER;
  std::string title;
  std::string body;
  std::map<TechniqueId, std::string> truth_labels;  // id -> technique name as annotated
  std::optional<std::vector<SentenceLabel>> sentence_labels;
  std::size_t word_count = 0;
  bool labels_emptied = false;  // set by restrict_labels when nothing survived
};

struct Corpus {
  std::string name;
  std::vector<RawReport> reports;  // sorted by report_id
};

// Header lines (`id:`, `title:`, `source:`), a `labels:` block of `ID<TAB>name`
// lines, an optional `sentence-labels:` block of `index<TAB>ID[,ID...]` lines,
// then a `---` line and the body. Sentence indices are resolved later.
struct ParsedReportFile {
  RawReport report;
  std::vector<std::pair<std::size_t, std::set<TechniqueId>>> sentence_annotations;
  bool has_sentence_block = false;
};

ParsedReportFile parse_report_file(std::string_view content, std::string_view origin);

Corpus ingest_ael(const std::filesystem::path& dir);

// Sentence annotations are resolved against segment(scrub(body)); any sentence
// label missing from the document labels is added with its catalog name.
Corpus ingest_atd(const std::filesystem::path& dir, const TechniqueCatalog& catalog,
                  const ScrubOptions& scrub_options = ScrubOptions::defaults());

RawReport restrict_labels(const RawReport& report, const std::set<TechniqueId>& allowed);

// Sentence records for every segmented sentence of reports that carry
// sentence-level truth; unlabeled sentences get an empty label set.
LabeledDataset sentence_dataset(const Corpus& corpus, const ScrubOptions& scrub_options = ScrubOptions::defaults());

}  // namespace ttpx
