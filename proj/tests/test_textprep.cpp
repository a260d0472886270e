#include <doctest.h>

#include <random>
#include <regex>
#include <string>
#include <vector>

#include "ttpx/textprep.hpp"

using namespace ttpx;

namespace {

const std::regex kIdOracle(R"(T\d{4})");
const std::regex kUrlOracle(R"((https?|hxxps?|ftp)://|www\.\S)", std::regex::icase);

std::string strip_ws(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\n' && c != '\t' && c != '\r') out.push_back(c);
  }
  return out;
}

std::string random_document(std::mt19937_64& rng) {
  static const std::vector<std::string> words{
      "the", "actor", "used", "cmd.exe", "to", "run", "(see", "report)", "Page", "TLP:GREEN", "and", "then",
      "deleted", "files.", "Mimikatz", "e.g.", "Tactic", "T", "T12", "1059", "mid-sentence,", "\"quoted\"", "x",
      "T1059x", "ATT&CK", "wwwx", "http", "://", "www.", "https:", "1.2.3.4", "HTTP://", "[link]"};
  std::uniform_int_distribution<int> kind(0, 9), digit(0, 9), len(0, 40);
  auto id = [&] {
    std::string s = "T";
    for (int i = 0; i < 4; ++i) s += char('0' + digit(rng));
    if (rng() % 2) {
      s += '.';
      for (int i = 0; i < 3; ++i) s += char('0' + digit(rng));
    }
    return s;
  };
  auto url = [&] {
    static const std::vector<std::string> schemes{"http://", "https://", "hxxp://", "HTTPS://", "ftp://", "www."};
    std::string s = schemes[rng() % schemes.size()] + "example" + std::to_string(rng() % 100) + ".com";
    if (rng() % 2) s += "/path/" + id() + "?q=" + std::to_string(rng() % 1000);
    static const std::vector<std::string> tails{"", ".", ",", ")", ").", ";"};
    return s + tails[rng() % tails.size()];
  };

  std::string doc;
  const int n = 1 + len(rng);
  for (int i = 0; i < n; ++i) {
    const int k = kind(rng);
    std::string token;
    if (k == 0) token = id();
    else if (k == 1) token = url();
    else if (k == 2) token = "(" + id() + ")";
    else if (k == 3) token = "word" + id();  // glued to a word
    else if (k == 4) token = id() + url();
    else token = words[rng() % words.size()];
    doc += token;
    const int sep = static_cast<int>(rng() % 10);
    doc += sep == 0 ? "\n\n" : sep == 1 ? "\n" : sep == 2 ? "  " : sep == 3 ? "" : " ";
  }
  return doc;
}

}  // namespace

TEST_SUITE("textprep") {

TEST_CASE("scrub examples") {
  CHECK(scrub("Adversary used T1059.003 to run scripts").body == "Adversary used to run scripts");
  CHECK(scrub("see https://example.com/report for details").body == "see for details");
  CHECK(scrub("Process Discovery (T1057) was seen.").body == "Process Discovery () was seen.");
  CHECK(scrub("").body.empty());

  const auto r = scrub("TLP:AMBER\nThe actor ran tasklist.\nPage 3 of 9\n");
  CHECK(r.body.find("TLP") == std::string::npos);
  CHECK(r.body.find("Page") == std::string::npos);
  CHECK(r.body.find("The actor ran tasklist.") != std::string::npos);
  bool extraneous = false;
  for (const auto& removal : r.removals) extraneous |= removal.reason == RemovalReason::Extraneous;
  CHECK(extraneous);
}

TEST_CASE("removal reasons and offsets") {
  const std::string text = "Used T1057 via https://x.io/a now";
  const auto r = scrub(text);
  REQUIRE_FALSE(r.removals.empty());
  bool saw_id = false, saw_url = false;
  for (const auto& removal : r.removals) {
    CHECK(text.compare(removal.offset, removal.text.size(), removal.text) == 0);
    saw_id |= removal.reason == RemovalReason::TechniqueId && removal.text == "T1057";
    saw_url |= removal.reason == RemovalReason::Hyperlink && removal.text == "https://x.io/a";
  }
  CHECK(saw_id);
  CHECK(saw_url);
  CHECK(to_string(RemovalReason::Hyperlink) == "HYPERLINK");
}

TEST_CASE("custom extraneous patterns") {
  const auto options = ScrubOptions::from_patterns({R"(internal use only)"});
  CHECK(scrub("Internal Use Only\nBody text.", options).body == "Body text.");
  CHECK(scrub("TLP:RED\nBody text.", options).body != "Body text.");
  CHECK_THROWS(ScrubOptions::from_patterns({"("}));
}

TEST_CASE("scrub property over 1000 generated documents") {
  std::mt19937_64 rng(1234);
  int with_ids = 0, with_urls = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto doc = random_document(rng);
    with_ids += std::regex_search(doc, kIdOracle);
    with_urls += std::regex_search(doc, kUrlOracle);
    const auto once = scrub(doc);
    CAPTURE(doc);
    CHECK_FALSE(std::regex_search(once.body, kIdOracle));
    CHECK_FALSE(std::regex_search(once.body, kUrlOracle));
    CHECK_FALSE(contains_technique_id(once.body));
    CHECK_FALSE(contains_url(once.body));
    CHECK(scrub(once.body).body == once.body);
    CHECK(reconstruct(once.body, once.removals) == doc);
  }
  CHECK(with_ids > 900);
  CHECK(with_urls > 500);
}

TEST_CASE("segment examples") {
  const auto two = segment("The actor logged in. Files were exfiltrated.");
  REQUIRE(two.size() == 2);
  CHECK(two[0].text == "The actor logged in.");
  CHECK(two[1].text == "Files were exfiltrated.");
  CHECK(segment("Tools (e.g. Mimikatz) were dropped.").size() == 1);
  CHECK(segment("").empty());
  CHECK(segment("  \n\n ").empty());
}

TEST_CASE("segment against hand-segmented text") {
  const std::string body =
      "Initial access\n\n"
      "The group sent lures, e.g. invoices. Dr. Smith of Acme Inc. opened one!\n"
      "It ran cmd.exe /c whoami. Was it detected? No.\n\n"
      "They said \"stop. now.\" and left (see Fig. 2). Done";
  const std::vector<std::string> expected{
      "Initial access",
      "The group sent lures, e.g. invoices.",
      "Dr. Smith of Acme Inc. opened one!",
      "It ran cmd.exe /c whoami.",
      "Was it detected?",
      "No.",
      "They said \"stop. now.\" and left (see Fig. 2).",
      "Done",
  };
  const auto got = segment(body, "r1");
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].text == expected[i]);
    CHECK(got[i].index == i);
    CHECK(got[i].report_id == "r1");
  }
}

TEST_CASE("segment invariants on generated text") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    const auto body = scrub(random_document(rng)).body;
    const auto sentences = segment(body);
    std::size_t total = 0;
    std::string joined;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      CHECK(sentences[k].index == k);
      CHECK_FALSE(sentences[k].text.empty());
      CHECK(sentences[k].text.find('\n') == std::string::npos);
      total += sentences[k].text.size();
      joined += sentences[k].text;
    }
    CHECK(total <= body.size());
    CHECK(strip_ws(joined) == strip_ws(body));
  }
}

TEST_CASE("word count") {
  CHECK(word_count("") == 0);
  CHECK(word_count("one two\nthree\t four ") == 4);
}

}
