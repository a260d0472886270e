#include "ttpx/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/kernels.hpp"

namespace ttpx {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw UsageError("threshold must lie in (0, 1); got " + std::to_string(threshold));
  }
}

}  // namespace

BaselineModel train_baseline(const LabeledDataset& dataset, const std::set<TechniqueId>& label_space, std::uint64_t seed,
                             const BaselineHyperparams& hp, TrainingLog* log) {
  if (dataset.empty()) throw DataError("cannot train on an empty dataset");
  if (label_space.empty()) throw UsageError("label space is empty");
  if (hp.epochs < 0 || !(hp.learning_rate > 0.0) || hp.l2 < 0.0 || hp.max_ngram < 1) {
    throw UsageError("invalid baseline hyperparameters");
  }
  for (const auto& s : dataset.sentences) {
    for (const auto& id : s.labels) {
      if (!label_space.contains(id)) {
        throw DataError("sentence '" + s.sentence_id + "' has label " + id.str() + " outside the label space");
      }
    }
  }

  std::vector<std::string> texts;
  texts.reserve(dataset.size());
  for (const auto& s : dataset.sentences) texts.push_back(s.text);

  BaselineModel model;
  model.seed_ = seed;
  model.hyperparams_ = hp;
  model.labels_.assign(label_space.begin(), label_space.end());
  model.vectorizer_ = TfidfVectorizer::fit(texts, TfidfOptions{hp.min_df, hp.max_ngram});
  if (model.vectorizer_.size() == 0) throw DataError("vocabulary is empty after applying min_df");

  const CsrMatrix x = model.vectorizer_.transform(texts);
  const std::size_t rows = x.rows();
  const std::size_t classes = model.labels_.size();
  const std::size_t features = x.cols;

  ClassTargets targets;
  targets.classes = classes;
  targets.rows = rows;
  targets.label.assign(classes * rows, 0);
  targets.sample_weight.assign(classes * rows, 0.0);
  targets.active.assign(classes, 0);
  model.trained_.assign(classes, 0);
  TrainingLog local_log;

  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (dataset.sentences[i].labels.contains(model.labels_[c])) {
        targets.label[c * rows + i] = 1;
        ++positives;
      }
    }
    if (positives == 0) {
      local_log.untrained.push_back(model.labels_[c]);
      continue;
    }
    const std::size_t negatives = rows - positives;
    // Positives and negatives each carry half of the total weight.
    const double pos_weight = negatives == 0 ? 1.0 / static_cast<double>(positives) : 0.5 / static_cast<double>(positives);
    const double neg_weight = negatives == 0 ? 0.0 : 0.5 / static_cast<double>(negatives);
    for (std::size_t i = 0; i < rows; ++i) {
      targets.sample_weight[c * rows + i] = targets.label[c * rows + i] ? pos_weight : neg_weight;
    }
    targets.active[c] = 1;
    model.trained_[c] = 1;
  }

  std::mt19937_64 rng(seed);
  model.weights_.assign(classes * features, 0.0);
  model.bias_.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < features; ++j) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (model.trained_[c]) model.weights_[c * features + j] = (2.0 * u - 1.0) * hp.init_scale;
    }
  }

  std::vector<double> losses(classes);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    kernels::gradient_step(x, targets, model.weights_, model.bias_, hp.learning_rate, hp.l2, losses);
    double total = 0.0;
    for (double l : losses) total += l;
    local_log.epoch_loss.push_back(total);
  }

  if (log != nullptr) *log = std::move(local_log);
  return model;
}

std::vector<double> BaselineModel::predict_proba(std::span<const std::string> texts) const {
  const std::size_t classes = labels_.size();
  const CsrMatrix x = vectorizer_.transform(texts);
  std::vector<double> out(x.rows() * classes);
  kernels::logits(x, weights_, bias_, classes, out);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      double& v = out[i * classes + c];
      v = trained_[c] ? sigmoid(v) : 0.0;
    }
  }
  return out;
}

std::string BaselineModel::serialize() const {
  ordered_json j;
  j["format"] = "ttpx-baseline";
  j["version"] = kFormatVersion;
  j["seed"] = seed_;
  j["hyperparams"] = ordered_json{{"min_df", hyperparams_.min_df},
                                  {"max_ngram", hyperparams_.max_ngram},
                                  {"epochs", hyperparams_.epochs},
                                  {"learning_rate", hyperparams_.learning_rate},
                                  {"l2", hyperparams_.l2},
                                  {"init_scale", hyperparams_.init_scale}};
  auto labels = ordered_json::array();
  for (const auto& id : labels_) labels.push_back(id.str());
  j["labels"] = std::move(labels);
  j["trained"] = trained_;
  j["vocabulary"] = vectorizer_.terms();
  j["idf"] = vectorizer_.idf();
  const std::size_t features = vectorizer_.size();
  auto weights = ordered_json::array();
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    weights.push_back(std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(c * features),
                                          weights_.begin() + static_cast<std::ptrdiff_t>((c + 1) * features)));
  }
  j["weights"] = std::move(weights);
  j["bias"] = bias_;
  return j.dump() + "\n";
}

BaselineModel BaselineModel::deserialize(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "ttpx-baseline") throw DataError("not a baseline model file");
    if (j.at("version").get<int>() != kFormatVersion) throw DataError("unsupported baseline model version");
    BaselineModel model;
    model.seed_ = j.at("seed").get<std::uint64_t>();
    const auto& hp = j.at("hyperparams");
    model.hyperparams_.min_df = hp.at("min_df").get<std::size_t>();
    model.hyperparams_.max_ngram = hp.at("max_ngram").get<int>();
    model.hyperparams_.epochs = hp.at("epochs").get<int>();
    model.hyperparams_.learning_rate = hp.at("learning_rate").get<double>();
    model.hyperparams_.l2 = hp.at("l2").get<double>();
    model.hyperparams_.init_scale = hp.at("init_scale").get<double>();
    for (const auto& id : j.at("labels")) model.labels_.emplace_back(id.get<std::string>());
    model.trained_ = j.at("trained").get<std::vector<std::uint8_t>>();
    model.vectorizer_ = TfidfVectorizer(j.at("vocabulary").get<std::vector<std::string>>(),
                                        j.at("idf").get<std::vector<double>>(), model.hyperparams_.max_ngram);
    const std::size_t features = model.vectorizer_.size();
    for (const auto& row : j.at("weights")) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != features) throw DataError("weight row length does not match the vocabulary");
      model.weights_.insert(model.weights_.end(), values.begin(), values.end());
    }
    model.bias_ = j.at("bias").get<std::vector<double>>();
    const std::size_t classes = model.labels_.size();
    if (model.trained_.size() != classes || model.bias_.size() != classes || model.weights_.size() != classes * features) {
      throw DataError("baseline model arrays have inconsistent sizes");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed baseline model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed baseline model: ") + e.what());
  }
}

BaselineModel load_baseline(const std::filesystem::path& path) {
  return BaselineModel::deserialize(io::read_text_file(path));
}

std::vector<ScoreVector> BaselineScorer::score(std::span<const Sentence> sentences) const {
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto probs = model_->predict_proba(texts);
  const auto& labels = model_->labels();

  std::vector<ScoreVector> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    ScoreVector v{sentences[i].report_id, sentences[i].index, {}};
    for (std::size_t c = 0; c < labels.size(); ++c) v.scores.emplace(labels[c], probs[i * labels.size() + c]);
    out.push_back(std::move(v));
  }
  return out;
}

RemoteScorer::RemoteScorer(std::string endpoint, std::set<TechniqueId> labels, std::size_t batch_size)
    : endpoint_(std::move(endpoint)), labels_(std::move(labels)), batch_size_(std::max<std::size_t>(batch_size, 1)) {
  if (endpoint_.empty()) throw UsageError("remote scorer needs an endpoint URL");
}

void RemoteScorer::check_health() const {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(std::chrono::seconds{10});
  auto result = client.Get("/health");
  if (!result) throw UpstreamError("scoring endpoint " + endpoint_ + " unreachable: " + httplib::to_string(result.error()));
  if (result->status != 200) throw UpstreamError("scoring endpoint health returned HTTP " + std::to_string(result->status));
  try {
    const auto body = json::parse(result->body);
    if (body.at("status").get<std::string>() != "ready") throw UpstreamError("scoring endpoint is not ready");
    const auto count = body.at("labels").get<std::size_t>();
    if (!labels_.empty() && count != labels_.size()) {
      throw UpstreamError("scoring endpoint serves " + std::to_string(count) + " labels; expected " +
                          std::to_string(labels_.size()));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed /health payload: ") + e.what());
  }
}

std::vector<ScoreVector> RemoteScorer::score(std::span<const Sentence> sentences) const {
  std::vector<ScoreVector> out;
  out.reserve(sentences.size());
  httplib::Client client(endpoint_);
  client.set_connection_timeout(std::chrono::seconds{10});
  client.set_read_timeout(std::chrono::seconds{300});

  for (std::size_t start = 0; start < sentences.size(); start += batch_size_) {
    const auto batch = sentences.subspan(start, std::min(batch_size_, sentences.size() - start));
    json request{{"sentences", json::array()}};
    for (const auto& s : batch) request["sentences"].push_back(s.text);

    auto result = client.Post("/score", request.dump(), "application/json");
    if (!result) throw UpstreamError("scoring endpoint " + endpoint_ + " unreachable: " + httplib::to_string(result.error()));
    if (result->status != 200) throw UpstreamError("scoring endpoint returned HTTP " + std::to_string(result->status));

    json body;
    try {
      body = json::parse(result->body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("malformed /score payload: ") + e.what());
    }
    if (!body.is_object() || !body.contains("scores") || !body["scores"].is_array()) {
      throw ProtocolError("/score response lacks a 'scores' array");
    }
    const auto& rows = body["scores"];
    if (rows.size() != batch.size()) {
      throw ProtocolError("cardinality mismatch: sent " + std::to_string(batch.size()) + " sentences, got " +
                          std::to_string(rows.size()) + " score rows");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!rows[i].is_array()) throw ProtocolError("score row " + std::to_string(start + i) + " is not an array");
      ScoreVector v{batch[i].report_id, batch[i].index, {}};
      for (const auto& entry : rows[i]) {
        if (!entry.is_object() || !entry.contains("technique_id") || !entry.contains("p") ||
            !entry["technique_id"].is_string() || !entry["p"].is_number()) {
          throw ProtocolError("score entry must be {\"technique_id\": string, \"p\": number}");
        }
        const auto id_text = entry["technique_id"].get<std::string>();
        const auto id = TechniqueId::parse(id_text);
        if (!id) throw ProtocolError("invalid technique id '" + id_text + "'");
        if (!labels_.empty() && !labels_.contains(*id)) throw ProtocolError("technique " + id_text + " outside the label space");
        const double p = entry["p"].get<double>();
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
          throw ProtocolError("confidence " + std::to_string(p) + " for " + id_text + " outside [0,1]");
        }
        if (!v.scores.emplace(*id, p).second) throw ProtocolError("duplicate technique " + id_text + " in one row");
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<ScoreVector> score_sentences(const SentenceScorer& scorer, std::span<const Sentence> sentences) {
  if (sentences.empty()) return {};
  auto out = scorer.score(sentences);
  if (out.size() != sentences.size()) throw UpstreamError(scorer.describe() + " returned a misaligned score list");
  return out;
}

std::vector<ScoreVector> remote_score(const std::string& endpoint, std::span<const Sentence> sentences,
                                      const std::set<TechniqueId>& labels) {
  RemoteScorer scorer(endpoint, labels);
  scorer.check_health();
  return score_sentences(scorer, sentences);
}

DocumentPrediction predict_document(std::span<const ScoreVector> scores, double threshold) {
  check_threshold(threshold);
  DocumentPrediction out;
  out.threshold = threshold;
  if (!scores.empty()) out.report_id = scores.front().report_id;
  std::map<TechniqueId, double> best;
  for (const auto& v : scores) {
    for (const auto& [id, p] : v.scores) {
      auto [it, inserted] = best.emplace(id, p);
      if (!inserted) it->second = std::max(it->second, p);
    }
  }
  for (const auto& [id, p] : best) {
    if (p >= threshold) out.predicted.emplace(id, p);
  }
  return out;
}

std::set<TechniqueId> predict_sentence(const ScoreVector& scores, double threshold) {
  check_threshold(threshold);
  std::set<TechniqueId> out;
  for (const auto& [id, p] : scores.scores) {
    if (p >= threshold) out.insert(id);
  }
  return out;
}

}  // namespace ttpx
