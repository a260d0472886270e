#include "ttpx/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "omp_compat.hpp"

namespace ttpx {

namespace {

bool is_alnum(char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<std::string> ngram_terms(std::string_view text, int max_ngram) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alnum(text[i])) {
      ++i;
      continue;
    }
    std::string token;
    while (i < text.size() && is_alnum(text[i])) {
      const char c = text[i++];
      token.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    tokens.push_back(std::move(token));
  }

  std::vector<std::string> terms = tokens;
  for (int n = 2; n <= max_ngram; ++n) {
    const auto width = static_cast<std::size_t>(n);
    for (std::size_t start = 0; start + width <= tokens.size(); ++start) {
      std::string gram = tokens[start];
      for (std::size_t k = 1; k < width; ++k) {
        gram += ' ';
        gram += tokens[start + k];
      }
      terms.push_back(std::move(gram));
    }
  }
  return terms;
}

TfidfVectorizer::TfidfVectorizer(std::vector<std::string> terms, std::vector<double> idf, int max_ngram)
    : terms_(std::move(terms)), idf_(std::move(idf)), max_ngram_(max_ngram) {
  if (terms_.size() != idf_.size()) throw std::invalid_argument("vocabulary and idf sizes differ");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary term '" + terms_[i] + "'");
    }
  }
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> texts, const TfidfOptions& options) {
  std::map<std::string, std::size_t, std::less<>> df;
  for (const auto& text : texts) {
    auto terms = ngram_terms(text, options.max_ngram);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& term : terms) ++df[std::move(term)];
  }
  const double n = static_cast<double>(texts.size());
  std::vector<std::string> vocabulary;
  std::vector<double> idf;
  for (const auto& [term, count] : df) {
    if (count < options.min_df) continue;
    vocabulary.push_back(term);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfidfVectorizer(std::move(vocabulary), std::move(idf), options.max_ngram);
}

void TfidfVectorizer::featurize(std::string_view text, std::vector<std::uint32_t>& idx,
                                std::vector<double>& vals) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& term : ngram_terms(text, max_ngram_)) {
    if (auto it = index_.find(term); it != index_.end()) counts[it->second] += 1.0;
  }
  idx.clear();
  vals.clear();
  double norm2 = 0.0;
  for (const auto& [column, count] : counts) {
    const double v = count * idf_[column];
    idx.push_back(column);
    vals.push_back(v);
    norm2 += v * v;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : vals) v *= inv;
  }
}

CsrMatrix TfidfVectorizer::transform(std::span<const std::string> texts) const {
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
  std::vector<std::vector<std::uint32_t>> row_idx(texts.size());
  std::vector<std::vector<double>> row_vals(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    featurize(texts[row], row_idx[row], row_vals[row]);
  }

  CsrMatrix matrix;
  matrix.cols = terms_.size();
  for (std::size_t i = 0; i < texts.size(); ++i) matrix.append_row(row_idx[i], row_vals[i]);
  return matrix;
}

}  // namespace ttpx
