#include <doctest.h>

#include <functional>

#include "support.hpp"
#include "ttpx/error.hpp"
#include "ttpx/llm_gateway.hpp"
#include "ttpx/prompt.hpp"
#include "ttpx/summarizer.hpp"
#include "ttpx/zeroshot.hpp"

using namespace ttpx;
using ttpx::test::tid;

namespace {

class FnTransport : public LlmTransport {
 public:
  explicit FnTransport(std::function<std::string(const LlmRequest&)> fn) : fn_(std::move(fn)) {}
  std::string send(const LlmRequest& r) override {
    ++calls;
    return fn_(r);
  }
  int calls = 0;

 private:
  std::function<std::string(const LlmRequest&)> fn_;
};

PromptTemplate report_prompt(std::string name) {
  return parse_prompt_template("name: " + name + "\nsystem: Analyst.\n---\nReport:\n{{report}}\n", name);
}

std::vector<MatchKind> kinds(const std::vector<TechniqueMention>& m) {
  std::vector<MatchKind> out;
  for (const auto& x : m) out.push_back(x.kind);
  return out;
}

}  // namespace

TEST_SUITE("zeroshot") {

TEST_CASE("mentions by id, name and unresolved items") {
  const auto catalog = ttpx::test::small_catalog();
  const auto m = parse_mentions(
      "Here are the techniques I found:\n"
      "1. T1566.001 - Spearphishing Attachment\n"
      "2. Process Discovery\n"
      "3. T1999 - Memory Scraping\n"
      "- Living off the land\n"
      "The actor also used an unnamed technique to hide.\n"
      "I hope this helps!\n",
      catalog);
  REQUIRE(m.size() == 6);
  CHECK(kinds(m) == std::vector<MatchKind>{MatchKind::ById, MatchKind::ByName, MatchKind::ByName,
                                           MatchKind::Unresolved, MatchKind::Unresolved, MatchKind::Unresolved});
  CHECK(m[0].resolved == tid("T1566.001"));
  CHECK(m[1].resolved == tid("T1566.001"));
  CHECK(m[2].resolved == tid("T1057"));
  CHECK(m[3].surface == "T1999");
  CHECK(m[4].surface == "Living off the land");
  CHECK(m[5].surface == "The actor also used an unnamed technique to hide");
}

TEST_CASE("names match as whole phrases, longest first, via aliases") {
  const auto catalog = ttpx::test::small_catalog();
  const NameMatcher matcher(catalog);
  auto hits = matcher.scan("They used RDP and a proxy; spear phishing attachment too. Proxyish words do not count.");
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].id == tid("T1021.001"));
  CHECK(hits[1].id == tid("T1090"));
  CHECK(hits[2].id == tid("T1566.001"));
  CHECK(matcher.scan("Windows Command Shell")[0].id == tid("T1059.003"));
  CHECK(matcher.scan("Phishing")[0].id == tid("T1566"));
  CHECK(matcher.scan("Spearphishing Attachment")[0].id == tid("T1566.001"));
}

TEST_CASE("extraction goes through the gateway and enforces the word cap") {
  ttpx::test::TempDir dir("zs");
  const auto catalog = ttpx::test::small_catalog();
  auto transport = std::make_shared<FnTransport>([](const LlmRequest& r) {
    CHECK(r.user_prompt.find("The actor ran tasklist.") != std::string::npos);
    return std::string("* Process Discovery (T1057)\n* Keylogging\n");
  });
  LlmGateway gw({GatewayMode::Live}, FixtureStore(dir.path()), transport);
  ZeroShotOptions options{report_prompt("zs"), 10};
  const CleanReport report{"R", "The actor ran tasklist.", {}};
  const auto result = extract_techniques(report, "llama2-7b", gw, catalog, options);
  CHECK(result.predicted == ttpx::test::ids({"T1057", "T1056.001"}));
  CHECK(result.model == "llama2-7b");

  const CleanReport wordy{"W", "one two three four five six seven eight nine ten eleven", {}};
  CHECK_THROWS_AS(extract_techniques(wordy, "llama2-7b", gw, catalog, options), DataError);
  CHECK_THROWS_AS(extract_techniques(CleanReport{"E", "  ", {}}, "llama2-7b", gw, catalog, options), DataError);
  CHECK(transport->calls == 1);
}

}

TEST_SUITE("summarizer") {

TEST_CASE("paragraph chunking") {
  const auto chunks = chunk_paragraphs("aaaa\n\nbbbb\n\ncc\n\n\n\ndddddddddddd", 10);
  CHECK(chunks == std::vector<std::string>{"aaaa\n\nbbbb", "cc", "dddddddddddd"});
  CHECK(chunk_paragraphs("", 10).empty());
  CHECK_THROWS_AS(chunk_paragraphs("x", 0), UsageError);
}

TEST_CASE("long report keeps its behavior sentences") {
  std::string body;
  const std::vector<int> behavior{7, 23, 41};
  for (int i = 0; i < 50; ++i) {
    if (!body.empty()) body += "\n\n";
    if (std::find(behavior.begin(), behavior.end(), i) != behavior.end()) {
      body += "The operators ran cmd.exe to stage tools in paragraph " + std::to_string(i) + ".";
    } else {
      body += "Background paragraph " + std::to_string(i) + " describes the victim organization and its market.";
    }
  }
  ttpx::test::TempDir dir("sum");
  auto transport = std::make_shared<FnTransport>([](const LlmRequest& r) {
    std::string out;
    std::size_t pos = 0;
    while ((pos = r.user_prompt.find("The operators", pos)) != std::string::npos) {
      const auto end = r.user_prompt.find('.', r.user_prompt.find("paragraph", pos));
      out += r.user_prompt.substr(pos, end - pos + 1) + " See https://x.example/y for T1059.003.\n";
      pos = end;
    }
    return out;
  });
  LlmGateway gw({GatewayMode::Live}, FixtureStore(dir.path()), transport);
  SummarizerOptions options{"gpt-3.5-turbo", report_prompt("sum"), 800};
  const CleanReport report{"L", body, {}};
  const auto s = summarize_report(report, gw, options);
  CHECK(s.chunks > 1);
  CHECK(transport->calls == static_cast<int>(s.chunks));
  for (int i : behavior) CHECK(s.summary.find("paragraph " + std::to_string(i) + ".") != std::string::npos);
  CHECK(s.summary.find("Background") == std::string::npos);
  CHECK_FALSE(contains_url(s.summary));
  CHECK_FALSE(contains_technique_id(s.summary));
  CHECK(s.compression_ratio < 0.2);
  CHECK_FALSE(s.fell_back_to_body);

  LlmGateway replay({GatewayMode::Replay}, FixtureStore(dir.path()));
  CHECK(summarize_report(report, replay, options).summary == s.summary);
}

TEST_CASE("an inflated summary falls back to the body") {
  ttpx::test::TempDir dir("sum");
  auto transport = std::make_shared<FnTransport>([](const LlmRequest&) { return std::string(500, 'x'); });
  LlmGateway gw({GatewayMode::Live}, FixtureStore(dir.path()), transport);
  const CleanReport report{"S", "Short body.", {}};
  const auto s = summarize_report(report, gw, SummarizerOptions{"m", report_prompt("sum")});
  CHECK(s.fell_back_to_body);
  CHECK(s.summary == "Short body.");
  CHECK(s.compression_ratio == doctest::Approx(1.0));
}

TEST_CASE("an empty summary is an upstream error") {
  ttpx::test::TempDir dir("sum");
  auto transport = std::make_shared<FnTransport>([](const LlmRequest&) { return std::string("https://only.a.link/"); });
  LlmGateway gw({GatewayMode::Live}, FixtureStore(dir.path()), transport);
  CHECK_THROWS_AS(summarize_report(CleanReport{"S", "Body text here.", {}}, gw, SummarizerOptions{"m", report_prompt("s")}),
                  UpstreamError);
}

}
