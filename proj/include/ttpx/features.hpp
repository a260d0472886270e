#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/kernels.hpp"

namespace ttpx {

// Lowercase alphanumeric tokens and their n-grams up to `max_ngram`, joined by ' '.
std::vector<std::string> ngram_terms(std::string_view text, int max_ngram);

struct TfidfOptions {
  std::size_t min_df = 2;
  int max_ngram = 2;
};

// Smoothed idf = ln((1 + n) / (1 + df)) + 1; rows are L2-normalized raw-count tf-idf.
class TfidfVectorizer {
 public:
  TfidfVectorizer() = default;
  TfidfVectorizer(std::vector<std::string> terms, std::vector<double> idf, int max_ngram);

  static TfidfVectorizer fit(std::span<const std::string> texts, const TfidfOptions& options);

  // Texts are featurized in parallel; row order follows input order.
  CsrMatrix transform(std::span<const std::string> texts) const;

  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  int max_ngram() const noexcept { return max_ngram_; }
  std::size_t size() const noexcept { return terms_.size(); }

 private:
  void featurize(std::string_view text, std::vector<std::uint32_t>& idx, std::vector<double>& vals) const;

  std::vector<std::string> terms_;  // index order == sorted order
  std::vector<double> idf_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
  int max_ngram_ = 2;
};

}  // namespace ttpx
