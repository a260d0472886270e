// Regenerates the REPLAY fixtures by running the LLM-backed profiles in LIVE
// mode against a scripted transport that answers from authored transcripts.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "ttpx/catalog.hpp"
#include "ttpx/corpus.hpp"
#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/llm_gateway.hpp"
#include "ttpx/pipeline.hpp"
#include "ttpx/prompt.hpp"
#include "ttpx/textprep.hpp"

namespace fs = std::filesystem;

namespace {

class AuthoringTransport : public ttpx::LlmTransport {
 public:
  explicit AuthoringTransport(const fs::path& root) : authored_(root / "data/fixtures/authored") {
    const auto data = root / "data";
    catalog_ = ttpx::load_catalog(data / "catalog/techniques.jsonl");
    zeroshot_system_ = ttpx::load_prompt_template(data / "prompts/zeroshot.prompt").system;
    summary_system_ = ttpx::load_prompt_template(data / "prompts/summarize.prompt").system;
    augment_system_ = ttpx::load_prompt_template(data / "prompts/augment.prompt").system;

    for (const auto& r : ttpx::ingest_ael(data / "ael").reports) {
      ael_bodies_.emplace_back(r.report_id, ttpx::scrub(r.body).body);
    }
    for (const auto& r : ttpx::ingest_atd(data / "atd", catalog_).reports) {
      if (!r.sentence_labels) continue;
      for (const auto& s : *r.sentence_labels) labeled_.push_back(s.text);
    }
  }

  std::string send(const ttpx::LlmRequest& request) override {
    if (request.system_prompt == zeroshot_system_) return zeroshot(request);
    if (request.system_prompt == summary_system_) return summary(request);
    if (request.system_prompt == augment_system_) return augment(request);
    throw ttpx::TransportError("no authored answer for this prompt", false);
  }

 private:
  std::string zeroshot(const ttpx::LlmRequest& request) const {
    for (const auto& [id, body] : ael_bodies_) {
      if (request.user_prompt.find(body) == std::string::npos) continue;
      const auto path = authored_ / "zeroshot" / request.model / (id + ".txt");
      if (!fs::exists(path)) throw ttpx::TransportError("no transcript " + path.string(), false);
      return ttpx::io::read_text_file(path);
    }
    throw ttpx::TransportError("zero-shot prompt matches no report", false);
  }

  // Keeps the annotated sentences of the chunk, in reading order.
  std::string summary(const ttpx::LlmRequest& request) const {
    std::vector<std::pair<std::size_t, const std::string*>> kept;
    for (const auto& s : labeled_) {
      const auto at = request.user_prompt.find(s);
      if (at != std::string::npos) kept.emplace_back(at, &s);
    }
    if (kept.empty()) return "No adversary behavior is described in this excerpt.\n";
    std::sort(kept.begin(), kept.end());
    std::string out;
    for (const auto& [at, s] : kept) {
      if (!out.empty()) out += ' ';
      out += *s;
    }
    return out + "\n";
  }

  std::string augment(const ttpx::LlmRequest& request) const {
    static const std::regex count_re(R"(Write (\d+) new sentences)");
    static const std::regex name_re(R"re(technique "([^"]+)")re");
    std::smatch count_m, name_m;
    if (!std::regex_search(request.user_prompt, count_m, count_re) ||
        !std::regex_search(request.user_prompt, name_m, name_re)) {
      throw ttpx::TransportError("augmentation prompt not understood", false);
    }
    const auto count = std::stoul(count_m[1]);
    const auto* technique = catalog_.find_by_name(name_m[1].str());
    if (!technique) throw ttpx::TransportError("unknown technique " + name_m[1].str(), false);
    const auto path = authored_ / "augment" / (technique->id.str() + ".txt");
    if (!fs::exists(path)) throw ttpx::TransportError("no authored sentences " + path.string(), false);

    const auto text = ttpx::io::read_text_file(path);
    std::string out = "Here are " + std::to_string(count) + " sentences:\n";
    std::size_t n = 0;
    for (const auto line : ttpx::io::split_lines(text)) {
      if (ttpx::io::trim(line).empty()) continue;
      if (n == count + 2) break;
      out += std::to_string(++n) + ". " + std::string(line) + "\n";
    }
    return out;
  }

  fs::path authored_;
  ttpx::TechniqueCatalog catalog_;
  std::string zeroshot_system_, summary_system_, augment_system_;
  std::vector<std::pair<std::string, std::string>> ael_bodies_;
  std::vector<std::string> labeled_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Record REPLAY fixtures from authored transcripts"};
  fs::path root = ".";
  fs::path out;
  fs::path scratch;
  std::vector<std::string> profiles{"cfg1", "cfg3", "cfg4"};
  app.add_option("--root", root, "Repository root")->check(CLI::ExistingDirectory);
  app.add_option("--out", out, "Fixture directory (default: <root>/data/fixtures/replay)");
  app.add_option("--scratch", scratch, "Where run artifacts go (default: temp dir)");
  app.add_option("--profiles", profiles, "Profile names under <root>/profiles");
  CLI11_PARSE(app, argc, argv);

  try {
    if (out.empty()) out = root / "data/fixtures/replay";
    if (scratch.empty()) scratch = fs::temp_directory_path() / "ttpx-record";
    fs::create_directories(out);
    for (const auto& entry : fs::directory_iterator(out)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") fs::remove(entry.path());
    }

    auto transport = std::make_shared<AuthoringTransport>(root);
    for (const auto& name : profiles) {
      const auto profile = ttpx::load_profile(root / "profiles" / (name + ".profile"),
                                              {"gateway_mode=LIVE", "llm_endpoint=authored://transcripts", "fixtures=" + fs::absolute(out).string(),
                                               "output=" + fs::absolute(scratch / name).string()});
      const auto report = ttpx::run_profile(profile, transport);
      std::cout << name << ": " << report.blocks.size() << " blocks\n";
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(out)) files += entry.path().extension() == ".json";
    std::cout << files << " fixtures in " << out.string() << "\n";
  } catch (const ttpx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
  return 0;
}
