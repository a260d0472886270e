#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "ttpx/catalog.hpp"
#include "ttpx/dataset.hpp"

namespace ttpx::test {

inline std::filesystem::path source_dir() { return TTPX_SOURCE_DIR; }

inline TechniqueId tid(std::string_view s) { return TechniqueId(s); }

inline std::set<TechniqueId> ids(std::initializer_list<std::string_view> list) {
  std::set<TechniqueId> out;
  for (auto s : list) out.insert(TechniqueId(s));
  return out;
}

inline LabeledSentence sentence(std::string id, std::string text, std::initializer_list<std::string_view> labels,
                                Provenance provenance = Provenance::Original) {
  LabeledSentence s;
  s.sentence_id = std::move(id);
  s.report_id = "r";
  s.text = std::move(text);
  s.labels = ids(labels);
  s.provenance = provenance;
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ttpx-" + std::string(tag) + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Small catalog used across suites.
TechniqueCatalog small_catalog();

}  // namespace ttpx::test
