#include "ttpx/corpus.hpp"

#include <algorithm>
#include <charconv>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

namespace fs = std::filesystem;

std::string_view to_string(ReportSource source) noexcept {
  switch (source) {
    case ReportSource::AEL: return "AEL";
    case ReportSource::ATD: return "ATD";
    case ReportSource::OTHER: return "OTHER";
  }
  return "OTHER";
}

namespace {

ReportSource parse_source(std::string_view value, const std::string& where) {
  if (value == "AEL") return ReportSource::AEL;
  if (value == "ATD") return ReportSource::ATD;
  if (value == "OTHER") return ReportSource::OTHER;
  throw DataError(where + ": unknown source '" + std::string(value) + "'");
}

TechniqueId parse_id(std::string_view text, const std::string& where) {
  auto id = TechniqueId::parse(io::trim(text));
  if (!id) throw DataError(where + ": invalid technique id '" + std::string(text) + "'");
  return *id;
}

std::vector<fs::path> report_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void sort_and_check_ids(Corpus& corpus) {
  std::sort(corpus.reports.begin(), corpus.reports.end(),
            [](const RawReport& a, const RawReport& b) { return a.report_id < b.report_id; });
  for (std::size_t i = 1; i < corpus.reports.size(); ++i) {
    if (corpus.reports[i].report_id == corpus.reports[i - 1].report_id) {
      throw DataError("duplicate report id '" + corpus.reports[i].report_id + "' in corpus " + corpus.name);
    }
  }
}

}  // namespace

ParsedReportFile parse_report_file(std::string_view content, std::string_view origin) {
  enum class Block { Header, Labels, SentenceLabels };

  ParsedReportFile parsed;
  RawReport& report = parsed.report;
  Block block = Block::Header;
  std::set<std::size_t> annotated;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool found_separator = false;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    const std::size_t next = end == std::string_view::npos ? content.size() : end + 1;
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = next;

    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (line == "---") {
      found_separator = true;
      break;
    }
    const auto trimmed = io::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;

    if (line.find('\t') != std::string_view::npos && block != Block::Header) {
      const auto tab = line.find('\t');
      const auto left = io::trim(line.substr(0, tab));
      const auto right = io::trim(line.substr(tab + 1));
      if (block == Block::Labels) {
        const TechniqueId id = parse_id(left, where);
        if (right.empty()) throw DataError(where + ": label " + id.str() + " has no technique name");
        if (!report.truth_labels.emplace(id, std::string(right)).second) {
          throw DataError(where + ": duplicate label " + id.str());
        }
      } else {
        std::size_t index = 0;
        auto [ptr, ec] = std::from_chars(left.data(), left.data() + left.size(), index);
        if (ec != std::errc{} || ptr != left.data() + left.size()) {
          throw DataError(where + ": malformed sentence index '" + std::string(left) + "'");
        }
        if (!annotated.insert(index).second) throw DataError(where + ": sentence " + std::to_string(index) + " annotated twice");
        std::set<TechniqueId> ids;
        std::size_t start = 0;
        while (start <= right.size()) {
          auto comma = right.find(',', start);
          if (comma == std::string_view::npos) comma = right.size();
          ids.insert(parse_id(right.substr(start, comma - start), where));
          start = comma + 1;
        }
        parsed.sentence_annotations.emplace_back(index, std::move(ids));
      }
      continue;
    }

    const auto colon = trimmed.find(':');
    if (colon == std::string_view::npos) throw DataError(where + ": malformed header line");
    const auto key = io::trim(trimmed.substr(0, colon));
    const auto value = io::trim(trimmed.substr(colon + 1));
    if (key == "labels" && value.empty()) {
      block = Block::Labels;
    } else if (key == "sentence-labels" && value.empty()) {
      block = Block::SentenceLabels;
      parsed.has_sentence_block = true;
    } else if (key == "id") {
      report.report_id = std::string(value);
      block = Block::Header;
    } else if (key == "title") {
      report.title = std::string(value);
      block = Block::Header;
    } else if (key == "source") {
      report.source = parse_source(value, where);
      block = Block::Header;
    } else if (block != Block::Header) {
      throw DataError(where + ": malformed annotation line (expected a tab separator)");
    } else {
      throw DataError(where + ": unknown header key '" + std::string(key) + "'");
    }
  }

  if (!found_separator) throw DataError(std::string(origin) + ": missing '---' body separator");
  if (report.report_id.empty()) throw DataError(std::string(origin) + ": missing 'id:' header");
  report.body = std::string(content.substr(pos));
  report.word_count = word_count(report.body);
  std::sort(parsed.sentence_annotations.begin(), parsed.sentence_annotations.end());
  return parsed;
}

Corpus ingest_ael(const fs::path& dir) {
  Corpus corpus;
  corpus.name = dir.filename().string();
  for (const auto& file : report_files(dir)) {
    auto parsed = parse_report_file(io::read_text_file(file), file.string());
    parsed.report.source = ReportSource::AEL;
    parsed.report.sentence_labels.reset();
    corpus.reports.push_back(std::move(parsed.report));
  }
  sort_and_check_ids(corpus);
  return corpus;
}

Corpus ingest_atd(const fs::path& dir, const TechniqueCatalog& catalog, const ScrubOptions& scrub_options) {
  Corpus corpus;
  corpus.name = dir.filename().string();
  for (const auto& file : report_files(dir)) {
    auto parsed = parse_report_file(io::read_text_file(file), file.string());
    RawReport& report = parsed.report;
    report.source = ReportSource::ATD;
    if (parsed.has_sentence_block) {
      const auto sentences = segment(scrub(report.body, scrub_options).body, report.report_id);
      std::vector<SentenceLabel> labels;
      for (auto& [index, ids] : parsed.sentence_annotations) {
        if (index >= sentences.size()) {
          throw DataError(file.string() + ": sentence index " + std::to_string(index) + " out of range (" +
                          std::to_string(sentences.size()) + " sentences)");
        }
        for (const auto& id : ids) {
          const auto* technique = catalog.find(id);
          if (technique == nullptr) {
            throw DataError(file.string() + ": sentence label references unknown technique " + id.str());
          }
          report.truth_labels.try_emplace(id, technique->name);
        }
        labels.push_back({index, sentences[index].text, std::move(ids)});
      }
      report.sentence_labels = std::move(labels);
    }
    corpus.reports.push_back(std::move(report));
  }
  sort_and_check_ids(corpus);
  return corpus;
}

RawReport restrict_labels(const RawReport& report, const std::set<TechniqueId>& allowed) {
  RawReport out = report;
  std::erase_if(out.truth_labels, [&](const auto& entry) { return !allowed.contains(entry.first); });
  if (out.sentence_labels) {
    for (auto& sentence : *out.sentence_labels) {
      std::erase_if(sentence.labels, [&](const TechniqueId& id) { return !allowed.contains(id); });
    }
    std::erase_if(*out.sentence_labels, [](const SentenceLabel& s) { return s.labels.empty(); });
  }
  out.labels_emptied = report.labels_emptied || (out.truth_labels.empty() && !report.truth_labels.empty());
  return out;
}

LabeledDataset sentence_dataset(const Corpus& corpus, const ScrubOptions& scrub_options) {
  LabeledDataset dataset;
  for (const auto& report : corpus.reports) {
    if (!report.sentence_labels) continue;
    std::map<std::size_t, const SentenceLabel*> by_index;
    for (const auto& label : *report.sentence_labels) by_index.emplace(label.index, &label);
    for (auto& sentence : segment(scrub(report.body, scrub_options).body, report.report_id)) {
      LabeledSentence record;
      record.sentence_id = report.report_id + "#" + std::to_string(sentence.index);
      record.report_id = report.report_id;
      record.text = std::move(sentence.text);
      if (auto it = by_index.find(sentence.index); it != by_index.end()) record.labels = it->second->labels;
      dataset.sentences.push_back(std::move(record));
    }
  }
  return dataset;
}

}  // namespace ttpx
