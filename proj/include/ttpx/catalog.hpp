#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ttpx {

// ATT&CK technique identifier: "T" + 4 digits, optionally "." + 3 digits.
class TechniqueId {
 public:
  // Exact match only; no trimming, no case folding.
  static std::optional<TechniqueId> parse(std::string_view text);

  // Throws DataError when `text` is not a valid identifier.
  explicit TechniqueId(std::string_view text);

  const std::string& str() const noexcept { return value_; }
  bool is_subtechnique() const noexcept { return value_.size() > 5; }
  TechniqueId parent() const;

  auto operator<=>(const TechniqueId&) const = default;

 private:
  struct Unchecked {};
  TechniqueId(Unchecked, std::string value) : value_(std::move(value)) {}

  std::string value_;
};

bool is_technique_id(std::string_view text) noexcept;

// Lowercase (ASCII), collapse internal whitespace, strip punctuation at both ends.
std::string normalize_name(std::string_view text);

struct Technique {
  TechniqueId id;
  std::string name;
  std::optional<int> prevalence_rank;
  std::vector<std::string> aliases;
};

class TechniqueCatalog {
 public:
  TechniqueCatalog() = default;
  // Validates uniqueness of IDs, normalized names/aliases and ranks.
  TechniqueCatalog(std::vector<Technique> techniques, std::string version);

  const Technique* find(const TechniqueId& id) const;
  const Technique* find_by_name(std::string_view name_or_alias) const;

  const std::map<TechniqueId, Technique>& techniques() const noexcept { return techniques_; }
  const std::string& version() const noexcept { return version_; }
  std::size_t size() const noexcept { return techniques_.size(); }

 private:
  std::map<TechniqueId, Technique> techniques_;
  std::map<std::string, TechniqueId> by_name_;
  std::string version_;
};

// JSON Lines, one technique per line: {"id","name","rank"?,"aliases"?}.
// An optional {"catalog_version": "..."} record may appear anywhere.
TechniqueCatalog load_catalog(const std::filesystem::path& path);

// ID match (after trimming) first, then normalized name or alias.
std::optional<Technique> resolve_mention(const TechniqueCatalog& catalog, std::string_view mention);

// The `count` techniques with the smallest prevalence rank.
std::set<TechniqueId> top_ranked(const TechniqueCatalog& catalog, std::size_t count);

inline constexpr std::size_t kTopLabelCount = 50;

inline std::set<TechniqueId> top50_set(const TechniqueCatalog& catalog) {
  return top_ranked(catalog, kTopLabelCount);
}

}  // namespace ttpx
