#include "ttpx/catalog.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Non-ASCII bytes are never treated as punctuation.
bool is_edge_punct(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

}  // namespace

bool is_technique_id(std::string_view text) noexcept {
  if (text.size() != 5 && text.size() != 9) return false;
  if (text[0] != 'T') return false;
  for (std::size_t i = 1; i < 5; ++i) {
    if (!is_digit(text[i])) return false;
  }
  if (text.size() == 9) {
    if (text[5] != '.') return false;
    for (std::size_t i = 6; i < 9; ++i) {
      if (!is_digit(text[i])) return false;
    }
  }
  return true;
}

std::optional<TechniqueId> TechniqueId::parse(std::string_view text) {
  if (!is_technique_id(text)) return std::nullopt;
  return TechniqueId(Unchecked{}, std::string(text));
}

TechniqueId::TechniqueId(std::string_view text) : value_(text) {
  if (!is_technique_id(text)) throw DataError("invalid technique id '" + std::string(text) + "'");
}

TechniqueId TechniqueId::parent() const {
  return TechniqueId(Unchecked{}, value_.substr(0, 5));
}

std::string normalize_name(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  std::size_t begin = 0;
  std::size_t end = out.size();
  while (begin < end && (is_edge_punct(out[begin]) || out[begin] == ' ')) ++begin;
  while (end > begin && (is_edge_punct(out[end - 1]) || out[end - 1] == ' ')) --end;
  return out.substr(begin, end - begin);
}

TechniqueCatalog::TechniqueCatalog(std::vector<Technique> techniques, std::string version)
    : version_(std::move(version)) {
  std::map<int, TechniqueId> ranks;
  for (auto& technique : techniques) {
    const TechniqueId id = technique.id;
    if (technique.name.empty()) throw DataError("technique " + id.str() + " has an empty name");
    if (technique.prevalence_rank) {
      if (*technique.prevalence_rank <= 0) {
        throw DataError("technique " + id.str() + " has a non-positive rank");
      }
      auto [it, inserted] = ranks.emplace(*technique.prevalence_rank, id);
      if (!inserted) {
        throw DataError("duplicate rank " + std::to_string(*technique.prevalence_rank) + " (" +
                        it->second.str() + ", " + id.str() + ")");
      }
    }

    std::vector<std::string> keys{normalize_name(technique.name)};
    for (const auto& alias : technique.aliases) keys.push_back(normalize_name(alias));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (const auto& key : keys) {
      if (key.empty()) throw DataError("technique " + id.str() + " has an empty name or alias");
      auto [it, inserted] = by_name_.emplace(key, id);
      if (!inserted) {
        throw DataError("duplicate normalized name '" + key + "' (" + it->second.str() + ", " +
                        id.str() + ")");
      }
    }

    auto [it, inserted] = techniques_.emplace(id, std::move(technique));
    if (!inserted) throw DataError("duplicate technique id " + id.str());
  }
}

const Technique* TechniqueCatalog::find(const TechniqueId& id) const {
  auto it = techniques_.find(id);
  return it == techniques_.end() ? nullptr : &it->second;
}

const Technique* TechniqueCatalog::find_by_name(std::string_view name_or_alias) const {
  auto it = by_name_.find(normalize_name(name_or_alias));
  return it == by_name_.end() ? nullptr : find(it->second);
}

TechniqueCatalog load_catalog(const std::filesystem::path& path) {
  const std::string content = io::read_text_file(path);
  const auto lines = io::split_lines(content);

  std::vector<Technique> techniques;
  std::string version;
  std::set<TechniqueId> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto line = io::trim(lines[i]);
    if (line.empty()) continue;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
    if (!record.is_object()) throw DataError(where + ": record is not an object");
    if (record.contains("catalog_version")) {
      version = record.at("catalog_version").get<std::string>();
      continue;
    }
    try {
      const auto& id_field = record.at("id");
      const auto& name_field = record.at("name");
      if (!id_field.is_string() || !name_field.is_string()) {
        throw DataError(where + ": 'id' and 'name' must be strings");
      }
      auto id = TechniqueId::parse(id_field.get<std::string>());
      if (!id) throw DataError(where + ": invalid technique id '" + id_field.get<std::string>() + "'");
      if (!seen.insert(*id).second) throw DataError(where + ": duplicate technique id " + id->str());

      Technique technique{*id, name_field.get<std::string>(), std::nullopt, {}};
      if (record.contains("rank") && !record.at("rank").is_null()) {
        if (!record.at("rank").is_number_integer()) throw DataError(where + ": 'rank' must be an integer");
        technique.prevalence_rank = record.at("rank").get<int>();
      }
      if (record.contains("aliases")) {
        for (const auto& alias : record.at("aliases")) technique.aliases.push_back(alias.get<std::string>());
      }
      techniques.push_back(std::move(technique));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
  }

  try {
    return TechniqueCatalog(std::move(techniques), std::move(version));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::optional<Technique> resolve_mention(const TechniqueCatalog& catalog, std::string_view mention) {
  const auto trimmed = io::trim(mention);
  if (auto id = TechniqueId::parse(trimmed)) {
    if (const auto* hit = catalog.find(*id)) return *hit;
  }
  if (const auto* hit = catalog.find_by_name(trimmed)) return *hit;
  return std::nullopt;
}

std::set<TechniqueId> top_ranked(const TechniqueCatalog& catalog, std::size_t count) {
  std::vector<std::pair<int, TechniqueId>> ranked;
  for (const auto& [id, technique] : catalog.techniques()) {
    if (technique.prevalence_rank) ranked.emplace_back(*technique.prevalence_rank, id);
  }
  if (ranked.size() < count) {
    throw DataError("catalog has " + std::to_string(ranked.size()) + " ranked techniques; " +
                    std::to_string(count) + " required");
  }
  std::sort(ranked.begin(), ranked.end());
  std::set<TechniqueId> out;
  for (std::size_t i = 0; i < count; ++i) out.insert(ranked[i].second);
  return out;
}

}  // namespace ttpx
