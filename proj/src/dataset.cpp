#include "ttpx/dataset.hpp"

#include <json.hpp>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

std::string_view to_string(Provenance provenance) noexcept {
  return provenance == Provenance::Synthetic ? "SYNTHETIC" : "ORIGINAL";
}

void validate_unique_ids(const LabeledDataset& dataset) {
  std::set<std::string_view> seen;
  for (const auto& s : dataset.sentences) {
    if (!seen.insert(s.sentence_id).second) throw DataError("duplicate sentence_id '" + s.sentence_id + "'");
  }
}

std::string to_jsonl(const LabeledDataset& dataset) {
  std::string out;
  for (const auto& s : dataset.sentences) {
    nlohmann::ordered_json record;
    record["sentence_id"] = s.sentence_id;
    record["report_id"] = s.report_id;
    record["text"] = s.text;
    auto labels = nlohmann::ordered_json::array();
    for (const auto& id : s.labels) labels.push_back(id.str());
    record["labels"] = std::move(labels);
    record["provenance"] = std::string(to_string(s.provenance));
    out += record.dump();
    out += '\n';
  }
  return out;
}

LabeledDataset dataset_from_jsonl(std::string_view content, std::string_view origin) {
  LabeledDataset dataset;
  const auto lines = io::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(i + 1);
    try {
      const auto record = nlohmann::json::parse(line);
      LabeledSentence s;
      s.sentence_id = record.at("sentence_id").get<std::string>();
      s.report_id = record.value("report_id", std::string{});
      s.text = record.at("text").get<std::string>();
      for (const auto& label : record.at("labels")) {
        auto id = TechniqueId::parse(label.get<std::string>());
        if (!id) throw DataError(where + ": invalid technique id '" + label.get<std::string>() + "'");
        s.labels.insert(*id);
      }
      const auto provenance = record.value("provenance", std::string("ORIGINAL"));
      if (provenance == "SYNTHETIC") {
        s.provenance = Provenance::Synthetic;
      } else if (provenance != "ORIGINAL") {
        throw DataError(where + ": unknown provenance '" + provenance + "'");
      }
      dataset.sentences.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed sentence record: " + e.what());
    }
  }
  validate_unique_ids(dataset);
  return dataset;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(io::read_text_file(path), path.string());
}

std::string normalize_for_dedup(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    const bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                       (static_cast<unsigned char>(c) >= 0x80);
    if (!alnum) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

}  // namespace ttpx
