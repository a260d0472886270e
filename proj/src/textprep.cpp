#include "ttpx/textprep.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_hspace(char c) noexcept { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }
bool is_space(char c) noexcept { return is_hspace(c) || c == '\n'; }
char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

struct Span {
  std::size_t begin;
  std::size_t end;
};

// Length of a technique-ID token starting at `i`, or 0.
std::size_t id_token_length(std::string_view text, std::size_t i) noexcept {
  if (text[i] != 'T' || i + 5 > text.size()) return 0;
  for (std::size_t k = 1; k < 5; ++k) {
    if (!is_digit(text[i + k])) return 0;
  }
  if (i + 9 <= text.size() && text[i + 5] == '.' && is_digit(text[i + 6]) && is_digit(text[i + 7]) &&
      is_digit(text[i + 8])) {
    return 9;
  }
  return 5;
}

bool starts_with_icase(std::string_view text, std::size_t i, std::string_view prefix) noexcept {
  if (i + prefix.size() > text.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (lower(text[i + k]) != prefix[k]) return false;
  }
  return true;
}

// Length of a URL token starting at `i`, or 0.
std::size_t url_token_length(std::string_view text, std::size_t i) noexcept {
  static constexpr std::array<std::string_view, 6> kPrefixes{"https://", "http://", "hxxps://",
                                                             "hxxp://",  "ftp://",  "www."};
  std::size_t prefix = 0;
  for (auto p : kPrefixes) {
    if (starts_with_icase(text, i, p)) {
      prefix = p.size();
      break;
    }
  }
  if (prefix == 0) return 0;
  const bool bare_www = prefix == 4;
  if (bare_www && (i + 4 >= text.size() || is_space(text[i + 4]))) return 0;

  std::size_t end = i + prefix;
  while (end < text.size() && !is_space(text[end])) ++end;

  // Leave sentence punctuation behind, but never shrink to a bare prefix.
  const std::size_t min_end = std::min(end, i + prefix + 1);
  auto count = [&](char c) { return std::count(text.begin() + static_cast<std::ptrdiff_t>(i), text.begin() + static_cast<std::ptrdiff_t>(end), c); };
  while (end > min_end) {
    const char c = text[end - 1];
    if (c == ')' && count('(') >= count(')')) break;
    if (c == ']' && count('[') >= count(']')) break;
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'' || c == '"' ||
        c == ')' || c == ']' || c == '}' || c == '>') {
      --end;
    } else {
      break;
    }
  }
  return end - i;
}

constexpr std::uint8_t kKept = 0;

std::uint8_t mark_of(RemovalReason reason) noexcept { return static_cast<std::uint8_t>(reason) + 1; }

struct View {
  std::string text;
  std::vector<std::size_t> origin;
};

View kept_view(std::string_view original, const std::vector<std::uint8_t>& marks) {
  View view;
  view.text.reserve(original.size());
  view.origin.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (marks[i] == kKept) {
      view.text.push_back(original[i]);
      view.origin.push_back(i);
    }
  }
  return view;
}

bool mark_tokens(const View& view, std::vector<std::uint8_t>& marks) {
  bool changed = false;
  const std::string_view text = view.text;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = id_token_length(text, i);
    RemovalReason reason = RemovalReason::TechniqueId;
    if (len == 0) {
      len = url_token_length(text, i);
      reason = RemovalReason::Hyperlink;
    }
    if (len == 0) {
      ++i;
      continue;
    }
    for (std::size_t k = i; k < i + len; ++k) marks[view.origin[k]] = mark_of(reason);
    changed = true;
    i += len;
  }
  return changed;
}

bool mark_extraneous(const View& view, const ScrubOptions& options, std::vector<std::uint8_t>& marks) {
  bool changed = false;
  const std::string_view text = view.text;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    const bool has_newline = end != std::string_view::npos;
    if (!has_newline) end = text.size();
    const auto line = io::trim(text.substr(start, end - start));
    if (!line.empty() && options.is_extraneous(line)) {
      const std::size_t stop = has_newline ? end + 1 : end;
      for (std::size_t k = start; k < stop; ++k) marks[view.origin[k]] = mark_of(RemovalReason::Extraneous);
      changed = true;
    }
    start = end + 1;
  }
  return changed;
}

void mark_whitespace(const View& view, std::vector<std::uint8_t>& marks) {
  const std::string_view text = view.text;
  const std::size_t n = text.size();
  std::vector<bool> drop(n, false);

  // Horizontal runs: dropped at line edges, otherwise reduced to their first char.
  std::size_t i = 0;
  while (i < n) {
    if (!is_hspace(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_hspace(text[j])) ++j;
    const bool at_edge = i == 0 || j == n || text[i - 1] == '\n' || text[j] == '\n';
    for (std::size_t k = at_edge ? i : i + 1; k < j; ++k) drop[k] = true;
    i = j;
  }

  // Newline runs: at most one blank line; none at either end of the text.
  std::vector<std::size_t> kept_positions;
  for (std::size_t k = 0; k < n; ++k) {
    if (!drop[k]) kept_positions.push_back(k);
  }
  std::size_t p = 0;
  while (p < kept_positions.size()) {
    if (text[kept_positions[p]] != '\n') {
      ++p;
      continue;
    }
    std::size_t q = p;
    while (q < kept_positions.size() && text[kept_positions[q]] == '\n') ++q;
    const bool at_edge = p == 0 || q == kept_positions.size();
    for (std::size_t r = at_edge ? p : p + 2; r < q; ++r) drop[kept_positions[r]] = true;
    p = q;
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (drop[k]) marks[view.origin[k]] = mark_of(RemovalReason::Whitespace);
  }
}

}  // namespace

std::string_view to_string(RemovalReason reason) noexcept {
  switch (reason) {
    case RemovalReason::TechniqueId: return "TECHNIQUE_ID";
    case RemovalReason::Hyperlink: return "HYPERLINK";
    case RemovalReason::Extraneous: return "EXTRANEOUS";
    case RemovalReason::Whitespace: return "WHITESPACE";
  }
  return "UNKNOWN";
}

ScrubOptions ScrubOptions::defaults() {
  return from_patterns({
      R"(page\s+\d+(\s+of\s+\d+)?)",
      R"(table\s+of\s+contents)",
      R"(tlp\s*:\s*(white|green|amber|red|clear)(\+strict)?)",
      R"((confidential|all rights reserved|copyright)\b.*)",
      R"([0-9a-f]{32}|[0-9a-f]{40}|[0-9a-f]{64})",
      R"((md5|sha1|sha256)\s*[:=]?\s*([0-9a-f]{32}|[0-9a-f]{40}|[0-9a-f]{64}))",
      R"(\d{1,3}(\s*\[?\.\]?\s*\d{1,3}){3}(:\d+)?)",
      R"((indicators of compromise|iocs?)\s*:?)",
  });
}

ScrubOptions ScrubOptions::from_patterns(std::vector<std::string> patterns) {
  ScrubOptions options;
  for (auto& pattern : patterns) {
    try {
      options.compiled_.emplace_back(pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw UsageError("invalid extraneous-content pattern '" + pattern + "': " + e.what());
    }
    options.sources_.push_back(std::move(pattern));
  }
  return options;
}

ScrubOptions ScrubOptions::load(const std::filesystem::path& path) {
  std::vector<std::string> patterns;
  const std::string content = io::read_text_file(path);
  for (auto line : io::split_lines(content)) {
    line = io::trim(line);
    if (line.empty() || line.front() == '#') continue;
    patterns.emplace_back(line);
  }
  return from_patterns(std::move(patterns));
}

bool ScrubOptions::is_extraneous(std::string_view trimmed_line) const {
  return std::any_of(compiled_.begin(), compiled_.end(), [&](const std::regex& re) {
    return std::regex_match(trimmed_line.begin(), trimmed_line.end(), re);
  });
}

ScrubResult scrub(std::string_view body, const ScrubOptions& options) {
  std::vector<std::uint8_t> marks(body.size(), kKept);

  // Removing a token can splice its neighbours into a new one, so iterate.
  bool changed = true;
  while (changed) {
    changed = false;
    while (mark_tokens(kept_view(body, marks), marks)) changed = true;
    if (mark_extraneous(kept_view(body, marks), options, marks)) changed = true;
  }
  mark_whitespace(kept_view(body, marks), marks);

  ScrubResult result;
  result.body.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (marks[i] == kKept) {
      result.body.push_back(body[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < body.size() && marks[j] == marks[i]) ++j;
    result.removals.push_back(
        {i, std::string(body.substr(i, j - i)), static_cast<RemovalReason>(marks[i] - 1)});
    i = j;
  }
  return result;
}

std::string reconstruct(std::string_view clean, std::span<const Removal> removals) {
  std::string out;
  out.reserve(clean.size());
  std::size_t consumed = 0;
  for (const auto& removal : removals) {
    if (removal.offset < out.size()) throw DataError("removal log is not sorted or overlaps");
    const std::size_t take = removal.offset - out.size();
    if (consumed + take > clean.size()) throw DataError("removal offset beyond reconstructed text");
    out.append(clean.substr(consumed, take));
    consumed += take;
    out.append(removal.text);
  }
  out.append(clean.substr(consumed));
  return out;
}

bool contains_technique_id(std::string_view text) noexcept {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (id_token_length(text, i) != 0) return true;
  }
  return false;
}

bool contains_url(std::string_view text) noexcept {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (url_token_length(text, i) != 0) return true;
  }
  return false;
}

namespace {

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> kAbbreviations{
      "e.g", "i.e", "eg",   "ie",   "vs",  "cf",  "al",  "fig",  "figs", "approx", "mr",  "mrs",
      "ms",  "dr",  "prof", "st",   "jr",  "sr",  "inc", "ltd",  "co",   "corp",   "dept", "no",
      "nos", "vol", "ver",  "v",    "u.s", "u.k", "e.u", "jan",  "feb",  "mar",    "apr", "jun",
      "jul", "aug", "sep",  "sept", "oct", "nov", "dec", "est",  "resp", "viz",    "ca",  "ref"};
  return kAbbreviations;
}

bool is_abbreviation_before(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1])) --start;
  std::string_view token = text.substr(start, dot - start);
  while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\'' ||
                            token.front() == '[')) {
    token.remove_prefix(1);
  }
  if (token.empty()) return false;
  if (token.size() == 1 && token[0] >= 'A' && token[0] <= 'Z') return true;  // initial
  return abbreviations().contains(io::to_lower_ascii(token));
}

bool is_open_quote_at(std::string_view text, std::size_t i) noexcept {
  return text.compare(i, 3, "\xE2\x80\x9C") == 0;
}
bool is_close_quote_at(std::string_view text, std::size_t i) noexcept {
  return text.compare(i, 3, "\xE2\x80\x9D") == 0;
}

// Marks positions strictly inside matched (), [], "..." and curly-quote pairs.
std::vector<int> protection_depth(std::string_view para) {
  std::vector<int> delta(para.size() + 1, 0);
  std::vector<std::size_t> parens;
  std::vector<std::size_t> brackets;
  std::vector<std::size_t> curly;
  std::optional<std::size_t> straight;
  auto protect = [&](std::size_t open, std::size_t close) {
    delta[open + 1] += 1;
    delta[close] -= 1;
  };
  for (std::size_t i = 0; i < para.size(); ++i) {
    const char c = para[i];
    if (c == '(') parens.push_back(i);
    else if (c == ')' && !parens.empty()) { protect(parens.back(), i); parens.pop_back(); }
    else if (c == '[') brackets.push_back(i);
    else if (c == ']' && !brackets.empty()) { protect(brackets.back(), i); brackets.pop_back(); }
    else if (c == '"') {
      if (straight) { protect(*straight, i); straight.reset(); }
      else straight = i;
    } else if (is_open_quote_at(para, i)) {
      curly.push_back(i + 2);
    } else if (is_close_quote_at(para, i) && !curly.empty()) {
      protect(curly.back(), i);
      curly.pop_back();
    }
  }
  std::vector<int> depth(para.size(), 0);
  int running = 0;
  for (std::size_t i = 0; i < para.size(); ++i) {
    running += delta[i];
    depth[i] = running;
  }
  return depth;
}

bool is_closer(std::string_view text, std::size_t i, std::size_t& width) noexcept {
  const char c = text[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') {
    width = 1;
    return true;
  }
  if (is_close_quote_at(text, i) || text.compare(i, 3, "\xE2\x80\x99") == 0) {
    width = 3;
    return true;
  }
  return false;
}

void emit_sentence(std::string_view piece, std::string_view report_id, std::vector<Sentence>& out) {
  piece = io::trim(piece);
  if (piece.empty()) return;
  std::string text(piece);
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  out.push_back({std::string(report_id), out.size(), std::move(text)});
}

void segment_paragraph(std::string_view para, std::string_view report_id, std::vector<Sentence>& out) {
  const auto depth = protection_depth(para);
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < para.size()) {
    const char c = para[i];
    if ((c != '.' && c != '!' && c != '?') || depth[i] > 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < para.size() && (para[j] == '.' || para[j] == '!' || para[j] == '?')) ++j;
    std::size_t width = 0;
    while (j < para.size() && is_closer(para, j, width)) j += width;

    bool boundary = true;
    if (j < para.size()) {
      if (!is_space(para[j])) {
        boundary = false;
      } else {
        std::size_t k = j;
        while (k < para.size() && is_space(para[k])) ++k;
        if (k < para.size() && para[k] >= 'a' && para[k] <= 'z') boundary = false;
      }
    }
    if (boundary && c == '.' && j == i + 1 && is_abbreviation_before(para, i)) boundary = false;

    if (boundary) {
      emit_sentence(para.substr(start, j - start), report_id, out);
      start = j;
    }
    i = j;
  }
  emit_sentence(para.substr(start), report_id, out);
}

}  // namespace

std::vector<Sentence> segment(std::string_view body, std::string_view report_id) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] != '\n') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < body.size() && is_hspace(body[j])) ++j;
    if (j < body.size() && body[j] == '\n') {
      segment_paragraph(body.substr(start, i - start), report_id, out);
      while (j < body.size() && is_space(body[j])) ++j;
      start = j;
      i = j;
    } else {
      i = j;
    }
  }
  if (start < body.size()) segment_paragraph(body.substr(start), report_id, out);
  return out;
}

std::size_t word_count(std::string_view text) noexcept {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

}  // namespace ttpx
