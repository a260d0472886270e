#pragma once

#include <cstddef>
#include <filesystem>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttpx {

enum class RemovalReason { TechniqueId, Hyperlink, Extraneous, Whitespace };

std::string_view to_string(RemovalReason reason) noexcept;

// One contiguous run of removed characters; `offset` indexes the original text.
struct Removal {
  std::size_t offset = 0;
  std::string text;
  RemovalReason reason = RemovalReason::Whitespace;

  bool operator==(const Removal&) const = default;
};

struct ScrubResult {
  std::string body;
  std::vector<Removal> removals;  // sorted by offset, non-overlapping
};

struct CleanReport {
  std::string report_id;
  std::string body;
  std::vector<Removal> removals;
};

// Line patterns treated as extraneous content (page furniture, bare IOC lines).
// Each pattern is matched case-insensitively against a whole trimmed line.
class ScrubOptions {
 public:
  static ScrubOptions defaults();
  static ScrubOptions from_patterns(std::vector<std::string> patterns);
  // One ECMAScript regex per line; blank lines and '#' comments skipped.
  static ScrubOptions load(const std::filesystem::path& path);

  bool is_extraneous(std::string_view trimmed_line) const;
  const std::vector<std::string>& patterns() const noexcept { return sources_; }

 private:
  std::vector<std::string> sources_;
  std::vector<std::regex> compiled_;
};

// Removes technique IDs, URLs and extraneous lines, then normalizes whitespace.
ScrubResult scrub(std::string_view body, const ScrubOptions& options = ScrubOptions::defaults());

// Inverse of scrub(): re-inserts logged removals into the cleaned body.
std::string reconstruct(std::string_view clean, std::span<const Removal> removals);

// Detectors used by scrub(); exposed for audits.
bool contains_technique_id(std::string_view text) noexcept;
bool contains_url(std::string_view text) noexcept;

struct Sentence {
  std::string report_id;
  std::size_t index = 0;
  std::string text;
};

// Rule-based segmentation: terminal punctuation, abbreviation exceptions, no
// split inside matched parentheses or quotes, blank lines are hard breaks.
std::vector<Sentence> segment(std::string_view body, std::string_view report_id = {});

std::size_t word_count(std::string_view text) noexcept;

}  // namespace ttpx
