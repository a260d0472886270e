#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "support.hpp"
#include "ttpx/classifier.hpp"
#include "ttpx/error.hpp"
#include "ttpx/features.hpp"
#include "ttpx/kernels.hpp"
#include "ttpx/metrics.hpp"

using namespace ttpx;
using ttpx::test::ids;
using ttpx::test::tid;

namespace {

TechniqueId class_id(int c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%04d", 1000 + c);
  return TechniqueId(buf);
}

// Each class owns two marker words; the rest is shared filler.
LabeledDataset separable_corpus(int classes, int per_class, std::uint64_t seed) {
  static const std::vector<std::string> filler{"the", "actor", "then", "used", "a", "tool", "on", "host",
                                               "during", "intrusion", "observed", "later"};
  std::mt19937_64 rng(seed);
  LabeledDataset d;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::string text;
      for (int k = 0; k < 5; ++k) text += filler[rng() % filler.size()] + " ";
      text += "marker" + std::to_string(c) + " signal" + std::to_string(c);
      for (int k = 0; k < 3; ++k) text += " " + filler[rng() % filler.size()];
      LabeledSentence s;
      s.sentence_id = "c" + std::to_string(c) + "-" + std::to_string(i);
      s.report_id = "syn";
      s.text = text + ".";
      s.labels = {class_id(c)};
      d.sentences.push_back(std::move(s));
    }
  }
  return d;
}

CsrMatrix random_csr(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CsrMatrix x;
  x.cols = cols;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::uint32_t> idx;
    std::vector<double> vals;
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng() % 3 == 0) {
        idx.push_back(static_cast<std::uint32_t>(c));
        vals.push_back(u(rng));
      }
    }
    x.append_row(idx, vals);
  }
  return x;
}

double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// The serial reference sums in a different order, so allow rounding noise.
bool close(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(b[i]))) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("ngram terms") {
  CHECK(ngram_terms("The actor, the ACTOR!", 2) ==
        std::vector<std::string>{"the", "actor", "the", "actor", "the actor", "actor the", "the actor"});
  CHECK(ngram_terms("", 2).empty());
}

TEST_CASE("tf-idf matches a hand computation") {
  const std::vector<std::string> docs{"run cmd run", "run tasklist", "cmd tasklist tasklist"};
  const auto v = TfidfVectorizer::fit(docs, TfidfOptions{1, 1});
  CHECK(v.terms() == std::vector<std::string>{"cmd", "run", "tasklist"});
  // df: cmd 2, run 2, tasklist 2 -> idf = ln(4/3) + 1 for every term.
  const double idf = std::log(4.0 / 3.0) + 1.0;
  for (double x : v.idf()) CHECK(x == doctest::Approx(idf).epsilon(1e-12));

  const auto m = v.transform(std::vector<std::string>{"run cmd run", "unknown words only"});
  REQUIRE(m.rows() == 2);
  // Row 0: cmd 1*idf, run 2*idf -> normalized (1, 2) / sqrt(5).
  REQUIRE(m.row_ptr[1] == 2);
  CHECK(m.indices[0] == 0);
  CHECK(m.values[0] == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK(m.indices[1] == 1);
  CHECK(m.values[1] == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(m.row_ptr[2] == 2);
}

TEST_CASE("min_df prunes rare terms") {
  const std::vector<std::string> docs{"alpha beta", "alpha gamma", "alpha beta delta"};
  const auto v = TfidfVectorizer::fit(docs, TfidfOptions{2, 2});
  CHECK(v.terms() == std::vector<std::string>{"alpha", "alpha beta", "beta"});
}

}

TEST_SUITE("kernels") {

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(5);
  const auto x = random_csr(97, 31, rng);
  const std::size_t classes = 7;
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> w(classes * x.cols), b(classes);
  for (auto& v : w) v = u(rng);
  for (auto& v : b) v = u(rng);

  std::vector<double> a(x.rows() * classes), s(x.rows() * classes);
  kernels::logits(x, w, b, classes, a);
  kernels::serial::logits(x, w, b, classes, s);
  CHECK(close(a, s));

  ClassTargets t;
  t.classes = classes;
  t.rows = x.rows();
  t.label.resize(classes * x.rows());
  t.sample_weight.resize(classes * x.rows());
  t.active.assign(classes, 1);
  t.active[3] = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      t.label[c * x.rows() + i] = (i + c) % 4 == 0;
      t.sample_weight[c * x.rows() + i] = 1.0 / static_cast<double>(x.rows());
    }
  }
  auto w1 = w, w2 = w, b1 = b, b2 = b;
  std::vector<double> l1(classes), l2(classes);
  for (int step = 0; step < 5; ++step) {
    kernels::gradient_step(x, t, w1, b1, 0.5, 1e-3, l1);
    kernels::serial::gradient_step(x, t, w2, b2, 0.5, 1e-3, l2);
  }
  CHECK(close(w1, w2));
  CHECK(close(b1, b2));
  CHECK(close(l1, l2));
  for (std::size_t j = 0; j < x.cols; ++j) CHECK(w1[3 * x.cols + j] == w[3 * x.cols + j]);
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 rng(11);
  const auto x = random_csr(40, 12, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::uint8_t> label(x.rows());
  std::vector<double> weight(x.rows());
  double total = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    label[i] = rng() % 2;
    weight[i] = 0.5 + u(rng) * 0.25;
    total += weight[i];
  }
  for (auto& v : weight) v /= total;
  std::vector<double> w(x.cols);
  for (auto& v : w) v = u(rng);
  double b = 0.3;
  const double l2 = 0.01;

  std::vector<double> grad(x.cols), scratch(x.cols);
  double grad_b = 0, scratch_b = 0;
  kernels::class_loss_gradient(x, label, weight, w, b, l2, grad, grad_b);

  const double h = 1e-6;
  for (std::size_t j = 0; j < x.cols; ++j) {
    auto wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    const double fp = kernels::class_loss_gradient(x, label, weight, wp, b, l2, scratch, scratch_b);
    const double fm = kernels::class_loss_gradient(x, label, weight, wm, b, l2, scratch, scratch_b);
    CAPTURE(j);
    CHECK(relative_error(grad[j], (fp - fm) / (2 * h)) < 1e-4);
  }
  const double fp = kernels::class_loss_gradient(x, label, weight, w, b + h, l2, scratch, scratch_b);
  const double fm = kernels::class_loss_gradient(x, label, weight, w, b - h, l2, scratch, scratch_b);
  CHECK(relative_error(grad_b, (fp - fm) / (2 * h)) < 1e-4);
}

}

TEST_SUITE("classifier") {

TEST_CASE("training loss never increases") {
  const auto d = separable_corpus(6, 10, 3);
  std::set<TechniqueId> space;
  for (int c = 0; c < 6; ++c) space.insert(class_id(c));
  TrainingLog log;
  BaselineHyperparams hp;
  hp.epochs = 60;
  hp.learning_rate = 1.0;
  train_baseline(d, space, 42, hp, &log);
  REQUIRE(log.epoch_loss.size() == 60);
  for (std::size_t e = 1; e < log.epoch_loss.size(); ++e) {
    CAPTURE(e);
    CHECK(log.epoch_loss[e] <= log.epoch_loss[e - 1] + 1e-12);
  }
  CHECK(log.epoch_loss.back() < log.epoch_loss.front() * 0.5);
}

TEST_CASE("separable corpus is learned") {
  const auto d = separable_corpus(50, 20, 8);
  std::set<TechniqueId> space;
  for (int c = 0; c < 50; ++c) space.insert(class_id(c));
  BaselineHyperparams hp;
  hp.learning_rate = 1.0;
  const auto model = train_baseline(d, space, 1, hp);

  std::vector<std::string> texts;
  for (const auto& s : d.sentences) texts.push_back(s.text);
  const auto proba = model.predict_proba(texts);
  std::vector<std::set<TechniqueId>> predicted, truth;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::set<TechniqueId> p;
    for (std::size_t c = 0; c < model.labels().size(); ++c) {
      if (proba[i * model.labels().size() + c] >= 0.5) p.insert(model.labels()[c]);
    }
    predicted.push_back(p);
    truth.push_back(d.sentences[i].labels);
  }
  std::vector<EvalMetrics> per_class;
  for (const auto& [id, score] : per_technique_metrics(predicted, truth)) per_class.push_back(score.metrics);
  CHECK(macro_average(per_class).f1 >= 0.95);
}

TEST_CASE("training is deterministic and round-trips through json") {
  const auto d = separable_corpus(4, 6, 2);
  auto space = ids({"T1000", "T1001", "T1002", "T1003", "T1570"});
  BaselineHyperparams hp;
  hp.epochs = 20;
  TrainingLog log;
  const auto a = train_baseline(d, space, 9, hp, &log);
  const auto b = train_baseline(d, space, 9, hp);
  CHECK(a.serialize() == b.serialize());
  CHECK(log.untrained == std::vector<TechniqueId>{tid("T1570")});
  CHECK_FALSE(train_baseline(d, space, 10, hp).serialize() == a.serialize());

  const auto back = BaselineModel::deserialize(a.serialize());
  CHECK(back.serialize() == a.serialize());
  const std::vector<std::string> probe{"marker1 signal1", "nothing known"};
  CHECK(back.predict_proba(probe) == a.predict_proba(probe));
  const auto p = a.predict_proba(probe);
  const auto untrained = static_cast<std::size_t>(std::find(a.labels().begin(), a.labels().end(), tid("T1570")) -
                                                  a.labels().begin());
  CHECK(p[untrained] == 0.0);

  CHECK_THROWS_AS(BaselineModel::deserialize("{}"), DataError);
  CHECK_THROWS_AS(BaselineModel::deserialize("not json"), DataError);
}

TEST_CASE("training input errors") {
  CHECK_THROWS_AS(train_baseline(LabeledDataset{}, ids({"T1057"}), 1), DataError);
  const auto d = separable_corpus(2, 3, 1);
  CHECK_THROWS_AS(train_baseline(d, {}, 1), UsageError);
  CHECK_THROWS_AS(train_baseline(d, ids({"T1000"}), 1), DataError);
  BaselineHyperparams bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(train_baseline(d, ids({"T1000", "T1001"}), 1, bad), UsageError);
}

TEST_CASE("threshold monotonicity over random score vectors") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoreVector> all;
  for (int i = 0; i < 100; ++i) {
    ScoreVector v{"r", static_cast<std::size_t>(i), {}};
    for (int c = 0; c < 12; ++c) v.scores[class_id(c)] = u(rng);
    all.push_back(v);
  }
  const std::vector<double> thresholds{0.05, 0.25, 0.5, 0.75, 0.8, 0.95};
  for (const auto& v : all) {
    for (std::size_t k = 1; k < thresholds.size(); ++k) {
      const auto lo = predict_sentence(v, thresholds[k - 1]);
      const auto hi = predict_sentence(v, thresholds[k]);
      CHECK(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
    }
  }
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    const auto lo = predict_document(all, thresholds[k - 1]).predicted;
    const auto hi = predict_document(all, thresholds[k]).predicted;
    for (const auto& [id, p] : hi) CHECK(lo.contains(id));
  }
}

TEST_CASE("document prediction takes the max over sentences") {
  std::vector<ScoreVector> s{{"r", 0, {{tid("T1057"), 0.3}, {tid("T1570"), 0.9}}}, {"r", 1, {{tid("T1057"), 0.6}}}};
  const auto d = predict_document(s, 0.5);
  CHECK(d.predicted == std::map<TechniqueId, double>{{tid("T1057"), 0.6}, {tid("T1570"), 0.9}});
  CHECK(predict_document(s, 0.6).predicted.size() == 2);
  CHECK(predict_document(s, 0.61).predicted.size() == 1);
  CHECK_THROWS_AS(predict_document(s, 0.0), UsageError);
  CHECK_THROWS_AS(predict_document(s, 1.0), UsageError);
  CHECK(predict_document({}, 0.5).predicted.empty());
}

}

TEST_SUITE("remote_scorer") {

namespace {

struct MockService {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string health = R"({"status":"ready","labels":2})";
  std::function<nlohmann::json(const nlohmann::json&)> reply;

  MockService() {
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(health, "application/json");
    });
    server.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(reply(nlohmann::json::parse(req.body)).dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockService() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

std::vector<Sentence> sentences(std::size_t n) {
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Sentence{"doc", i, "sentence " + std::to_string(i)});
  return out;
}

nlohmann::json row(std::initializer_list<std::pair<const char*, double>> entries) {
  auto r = nlohmann::json::array();
  for (const auto& [id, p] : entries) r.push_back({{"technique_id", id}, {"p", p}});
  return r;
}

}  // namespace

TEST_CASE("health and scoring in batches") {
  MockService mock;
  std::vector<std::size_t> batch_sizes;
  mock.reply = [&](const nlohmann::json& req) {
    batch_sizes.push_back(req["sentences"].size());
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < req["sentences"].size(); ++i) rows.push_back(row({{"T1057", 0.9}, {"T1570", 0.1}}));
    return nlohmann::json{{"scores", rows}};
  };
  RemoteScorer scorer(mock.url(), ids({"T1057", "T1570"}), 4);
  scorer.check_health();
  const auto s = sentences(10);
  const auto out = scorer.score(s);
  CHECK(batch_sizes == std::vector<std::size_t>{4, 4, 2});
  REQUIRE(out.size() == 10);
  CHECK(out[9].index == 9);
  CHECK(out[9].scores.at(tid("T1057")) == 0.9);
  CHECK(score_sentences(scorer, {}).empty());
}

TEST_CASE("health failures") {
  MockService mock;
  mock.health = R"({"status":"loading","labels":2})";
  CHECK_THROWS_AS(RemoteScorer(mock.url(), ids({"T1057", "T1570"})).check_health(), UpstreamError);
  mock.health = R"({"status":"ready","labels":50})";
  CHECK_THROWS_AS(RemoteScorer(mock.url(), ids({"T1057", "T1570"})).check_health(), UpstreamError);
  mock.health = R"(not json)";
  CHECK_THROWS_AS(RemoteScorer(mock.url()).check_health(), ProtocolError);
  CHECK_THROWS_AS(RemoteScorer("http://127.0.0.1:1").check_health(), UpstreamError);
  CHECK_THROWS_AS(RemoteScorer(""), UsageError);
}

TEST_CASE("protocol violations") {
  MockService mock;
  RemoteScorer scorer(mock.url(), ids({"T1057", "T1570"}));
  const auto s = sentences(2);
  auto expect_protocol_error = [&](nlohmann::json reply) {
    mock.reply = [reply](const nlohmann::json&) { return reply; };
    CHECK_THROWS_AS(scorer.score(s), ProtocolError);
  };
  expect_protocol_error({{"scores", {row({{"T1057", 0.5}})}}});
  expect_protocol_error({{"scores", {row({{"T1057", 1.7}}), row({})}}});
  expect_protocol_error({{"scores", {row({{"T1057", -0.1}}), row({})}}});
  expect_protocol_error({{"scores", {row({{"T1486", 0.5}}), row({})}}});
  expect_protocol_error({{"scores", {row({{"T57", 0.5}}), row({})}}});
  expect_protocol_error({{"scores", {row({{"T1057", 0.5}, {"T1057", 0.4}}), row({})}}});
  expect_protocol_error({{"scores", {nlohmann::json{{"T1057", 0.5}}, row({})}}});
  expect_protocol_error({{"result", nlohmann::json::array()}});
}

}
