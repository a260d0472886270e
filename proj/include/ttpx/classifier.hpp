#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/dataset.hpp"
#include "ttpx/features.hpp"
#include "ttpx/textprep.hpp"

namespace ttpx {

// Per-sentence, per-class confidences; classes are independent (multi-label).
struct ScoreVector {
  std::string report_id;
  std::size_t index = 0;
  std::map<TechniqueId, double> scores;
};

struct DocumentPrediction {
  std::string report_id;
  double threshold = 0.5;
  std::map<TechniqueId, double> predicted;  // technique -> max confidence over sentences
};

struct BaselineHyperparams {
  std::size_t min_df = 2;
  int max_ngram = 2;
  int epochs = 200;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  double init_scale = 1e-3;  // weights start uniform in [-init_scale, init_scale]
};

struct TrainingLog {
  std::vector<double> epoch_loss;       // summed over classes, before each step
  std::vector<TechniqueId> untrained;   // classes with no positive example
};

// TF-IDF features feeding one class-balanced logistic model per label.
class BaselineModel {
 public:
  static constexpr int kFormatVersion = 1;

  BaselineModel() = default;

  const std::vector<TechniqueId>& labels() const noexcept { return labels_; }
  const std::vector<std::uint8_t>& trained() const noexcept { return trained_; }
  const TfidfVectorizer& vectorizer() const noexcept { return vectorizer_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const BaselineHyperparams& hyperparams() const noexcept { return hyperparams_; }

  // Row-major probabilities [sentence][label]; untrained labels score 0.
  std::vector<double> predict_proba(std::span<const std::string> texts) const;

  std::string serialize() const;
  static BaselineModel deserialize(std::string_view text);

 private:
  friend BaselineModel train_baseline(const LabeledDataset&, const std::set<TechniqueId>&, std::uint64_t,
                                      const BaselineHyperparams&, TrainingLog*);

  std::vector<TechniqueId> labels_;
  std::vector<std::uint8_t> trained_;
  TfidfVectorizer vectorizer_;
  std::vector<double> weights_;  // class-major
  std::vector<double> bias_;
  std::uint64_t seed_ = 0;
  BaselineHyperparams hyperparams_;
};

// Deterministic given (dataset, label space, seed, hyperparams). Every dataset
// label must belong to `label_space`.
BaselineModel train_baseline(const LabeledDataset& dataset, const std::set<TechniqueId>& label_space, std::uint64_t seed,
                             const BaselineHyperparams& hyperparams = {}, TrainingLog* log = nullptr);

BaselineModel load_baseline(const std::filesystem::path& path);

class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  // One ScoreVector per sentence, in input order.
  virtual std::vector<ScoreVector> score(std::span<const Sentence> sentences) const = 0;
  virtual std::string describe() const = 0;
};

class BaselineScorer : public SentenceScorer {
 public:
  explicit BaselineScorer(std::shared_ptr<const BaselineModel> model) : model_(std::move(model)) {}
  std::vector<ScoreVector> score(std::span<const Sentence> sentences) const override;
  std::string describe() const override { return "baseline"; }

 private:
  std::shared_ptr<const BaselineModel> model_;
};

// Client for the scoring service: GET /health, POST /score.
class RemoteScorer : public SentenceScorer {
 public:
  // `labels` (when non-empty) is the label space responses must stay within.
  RemoteScorer(std::string endpoint, std::set<TechniqueId> labels = {}, std::size_t batch_size = 64);

  // Throws UpstreamError unless the service reports ready with the expected label count.
  void check_health() const;
  std::vector<ScoreVector> score(std::span<const Sentence> sentences) const override;
  std::string describe() const override { return "remote " + endpoint_; }

 private:
  std::string endpoint_;
  std::set<TechniqueId> labels_;
  std::size_t batch_size_;
};

std::vector<ScoreVector> score_sentences(const SentenceScorer& scorer, std::span<const Sentence> sentences);

std::vector<ScoreVector> remote_score(const std::string& endpoint, std::span<const Sentence> sentences,
                                      const std::set<TechniqueId>& labels = {});

// predicted = { t : max_s score(s, t) >= threshold }; threshold in (0, 1).
DocumentPrediction predict_document(std::span<const ScoreVector> scores, double threshold);

std::set<TechniqueId> predict_sentence(const ScoreVector& scores, double threshold);

}  // namespace ttpx
