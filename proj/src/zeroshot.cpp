#include "ttpx/zeroshot.hpp"

#include <algorithm>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

namespace {

bool is_alnum(char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

struct Token {
  std::size_t begin;
  std::size_t end;
  std::string lowered;
};

std::vector<Token> word_tokens(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alnum(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_alnum(text[j])) ++j;
    tokens.push_back({i, j, io::to_lower_ascii(text.substr(i, j - i))});
    i = j;
  }
  return tokens;
}

std::string phrase_key(std::string_view name) {
  std::string key;
  for (const auto& token : word_tokens(name)) {
    if (!key.empty()) key += ' ';
    key += token.lowered;
  }
  return key;
}

struct IdSpan {
  std::size_t begin;
  std::size_t end;
  std::string text;  // canonical uppercase form
};

// Technique-ID tokens bounded by non-alphanumerics; accepts a lowercase 't'.
std::vector<IdSpan> id_spans(std::string_view line) {
  std::vector<IdSpan> spans;
  for (std::size_t i = 0; i + 5 <= line.size(); ++i) {
    if (line[i] != 'T' && line[i] != 't') continue;
    if (i > 0 && is_alnum(line[i - 1])) continue;
    if (!std::all_of(line.begin() + static_cast<std::ptrdiff_t>(i + 1), line.begin() + static_cast<std::ptrdiff_t>(i + 5),
                     is_digit)) {
      continue;
    }
    std::size_t end = i + 5;
    if (end + 4 <= line.size() && line[end] == '.' && is_digit(line[end + 1]) && is_digit(line[end + 2]) &&
        is_digit(line[end + 3]) && (end + 4 == line.size() || !is_alnum(line[end + 4]))) {
      end += 4;
    } else if (end < line.size() && is_alnum(line[end])) {
      continue;
    }
    std::string canonical(line.substr(i, end - i));
    canonical[0] = 'T';
    spans.push_back({i, end, std::move(canonical)});
    i = end - 1;
  }
  return spans;
}

// "- item", "* item", "1. item", "2) item"; returns the item text or empty.
std::string_view strip_list_marker(std::string_view line, bool& was_item) {
  line = io::trim(line);
  was_item = false;
  if (line.empty()) return line;
  if (line.starts_with("- ") || line.starts_with("* ") || line.starts_with("\xE2\x80\xA2 ")) {
    was_item = true;
    return io::trim(line.substr(line.find(' ') + 1));
  }
  std::size_t i = 0;
  while (i < line.size() && is_digit(line[i])) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') {
    was_item = true;
    return io::trim(line.substr(i + 2));
  }
  return line;
}

bool makes_technique_claim(std::string_view text) {
  const auto lowered = io::to_lower_ascii(text);
  for (std::string_view word : {"attack", "technique", "tactic", "procedure"}) {
    if (lowered.find(word) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(MatchKind kind) noexcept {
  switch (kind) {
    case MatchKind::ById: return "BY_ID";
    case MatchKind::ByName: return "BY_NAME";
    case MatchKind::Unresolved: return "UNRESOLVED";
  }
  return "UNRESOLVED";
}

NameMatcher::NameMatcher(const TechniqueCatalog& catalog) {
  std::map<std::string, std::set<TechniqueId>> owners;
  for (const auto& [id, technique] : catalog.techniques()) {
    owners[phrase_key(technique.name)].insert(id);
    for (const auto& alias : technique.aliases) owners[phrase_key(alias)].insert(id);
  }
  for (auto& [key, ids] : owners) {
    if (key.empty() || ids.size() != 1) continue;
    max_tokens_ = std::max<std::size_t>(max_tokens_, 1 + std::count(key.begin(), key.end(), ' '));
    phrases_.emplace(key, *ids.begin());
  }
}

std::vector<NameMatcher::Hit> NameMatcher::scan(std::string_view text) const {
  const auto tokens = word_tokens(text);
  std::vector<Hit> hits;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_tokens_, tokens.size() - i); len >= 1; --len) {
      std::string key = tokens[i].lowered;
      for (std::size_t k = 1; k < len; ++k) {
        key += ' ';
        key += tokens[i + k].lowered;
      }
      if (auto it = phrases_.find(key); it != phrases_.end()) {
        hits.push_back({tokens[i].begin, tokens[i + len - 1].end, it->second});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return hits;
}

std::vector<TechniqueMention> parse_mentions(std::string_view text, const TechniqueCatalog& catalog) {
  const NameMatcher matcher(catalog);
  std::vector<TechniqueMention> mentions;

  for (const auto line : io::split_lines(text)) {
    struct Located {
      std::size_t begin;
      TechniqueMention mention;
    };
    std::vector<Located> found;

    const auto ids = id_spans(line);
    for (const auto& span : ids) {
      const auto id = TechniqueId::parse(span.text);
      const bool known = id && catalog.find(*id) != nullptr;
      found.push_back({span.begin, TechniqueMention{std::string(line.substr(span.begin, span.end - span.begin)),
                                                     known ? id : std::nullopt,
                                                     known ? MatchKind::ById : MatchKind::Unresolved}});
    }
    for (const auto& hit : matcher.scan(line)) {
      const bool overlaps_id = std::any_of(ids.begin(), ids.end(), [&](const IdSpan& s) {
        return hit.begin < s.end && s.begin < hit.end;
      });
      if (overlaps_id) continue;
      found.push_back({hit.begin, TechniqueMention{std::string(line.substr(hit.begin, hit.end - hit.begin)), hit.id,
                                                    MatchKind::ByName}});
    }

    if (found.empty()) {
      bool was_item = false;
      auto item = strip_list_marker(line, was_item);
      while (!item.empty() && (item.back() == '.' || item.back() == ',' || item.back() == ';')) item.remove_suffix(1);
      const bool has_letter = std::any_of(item.begin(), item.end(), [](char c) { return is_alnum(c) && !is_digit(c); });
      if (has_letter && !item.ends_with(":") && (was_item || makes_technique_claim(item))) {
        mentions.push_back(TechniqueMention{std::string(item), std::nullopt, MatchKind::Unresolved});
      }
      continue;
    }
    std::stable_sort(found.begin(), found.end(), [](const Located& a, const Located& b) { return a.begin < b.begin; });
    for (auto& located : found) mentions.push_back(std::move(located.mention));
  }
  return mentions;
}

LlmRequest zeroshot_request(const CleanReport& report, const std::string& model, const ZeroShotOptions& options) {
  return LlmRequest{model, options.prompt.system, options.prompt.render_user({{"report", report.body}}),
                    options.temperature, options.max_tokens};
}

ExtractionResult extract_techniques(const CleanReport& report, const std::string& model, LlmGateway& gateway,
                                    const TechniqueCatalog& catalog, const ZeroShotOptions& options) {
  if (io::trim(report.body).empty()) throw DataError("report '" + report.report_id + "' has an empty body");
  const auto words = word_count(report.body);
  if (options.strict && words > options.word_cap) {
    throw DataError("report '" + report.report_id + "' has " + std::to_string(words) + " words (cap " +
                    std::to_string(options.word_cap) + ")");
  }

  const auto response = gateway.complete(zeroshot_request(report, model, options));
  ExtractionResult result;
  result.report_id = report.report_id;
  result.model = model;
  result.mentions = parse_mentions(response.text, catalog);
  for (const auto& mention : result.mentions) {
    if (mention.resolved) result.predicted.insert(*mention.resolved);
  }
  return result;
}

}  // namespace ttpx
