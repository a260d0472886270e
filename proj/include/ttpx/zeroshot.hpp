#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/llm_gateway.hpp"
#include "ttpx/prompt.hpp"
#include "ttpx/textprep.hpp"

namespace ttpx {

enum class MatchKind { ById, ByName, Unresolved };

std::string_view to_string(MatchKind kind) noexcept;

struct TechniqueMention {
  std::string surface;
  std::optional<TechniqueId> resolved;
  MatchKind kind = MatchKind::Unresolved;

  bool operator==(const TechniqueMention&) const = default;
};

struct ExtractionResult {
  std::string report_id;
  std::string model;
  std::vector<TechniqueMention> mentions;
  std::set<TechniqueId> predicted;
};

// Whole-phrase matcher over catalog names and aliases (token sequences,
// longest match first). Token keys shared by two techniques are dropped.
class NameMatcher {
 public:
  explicit NameMatcher(const TechniqueCatalog& catalog);

  struct Hit {
    std::size_t begin;  // byte offsets into the scanned text
    std::size_t end;
    TechniqueId id;
  };
  std::vector<Hit> scan(std::string_view text) const;

 private:
  std::map<std::string, TechniqueId, std::less<>> phrases_;
  std::size_t max_tokens_ = 0;
};

// Free-text LLM answer -> mentions: ID tokens (BY_ID, or UNRESOLVED when not in
// the catalog), catalog names/aliases (BY_NAME), and technique-like list items
// or claims that resolve to nothing (UNRESOLVED).
std::vector<TechniqueMention> parse_mentions(std::string_view text, const TechniqueCatalog& catalog);

struct ZeroShotOptions {
  PromptTemplate prompt;  // placeholders: {{report}}
  std::size_t word_cap = 500;
  bool strict = true;  // reject reports above word_cap instead of sending them
  double temperature = 0.0;
  int max_tokens = 1024;
};

LlmRequest zeroshot_request(const CleanReport& report, const std::string& model, const ZeroShotOptions& options);

ExtractionResult extract_techniques(const CleanReport& report, const std::string& model, LlmGateway& gateway,
                                    const TechniqueCatalog& catalog, const ZeroShotOptions& options);

}  // namespace ttpx
