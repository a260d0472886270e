#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/pipeline.hpp"

namespace ttpx {

std::string_view to_string(ConfigKind kind) noexcept {
  switch (kind) {
    case ConfigKind::Cfg1Zeroshot: return "CFG1_ZEROSHOT";
    case ConfigKind::Cfg2Classify: return "CFG2_CLASSIFY";
    case ConfigKind::Cfg3SummarizeClassify: return "CFG3_SUMMARIZE_CLASSIFY";
    case ConfigKind::Cfg4Rebalanced: return "CFG4_REBALANCED";
  }
  return "?";
}

ConfigKind parse_config_kind(std::string_view text) {
  for (auto kind : {ConfigKind::Cfg1Zeroshot, ConfigKind::Cfg2Classify, ConfigKind::Cfg3SummarizeClassify,
                    ConfigKind::Cfg4Rebalanced}) {
    if (text == to_string(kind)) return kind;
  }
  throw UsageError("unknown config '" + std::string(text) + "'");
}

std::string_view to_string(Backend backend) noexcept { return backend == Backend::Baseline ? "baseline" : "remote"; }

namespace {

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = value.find(',', start);
    const auto item = io::trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("profile key '" + key + "': '" + value + "' is not a number");
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw UsageError("profile key '" + key + "': '" + value + "' is not a non-negative integer");
  }
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw UsageError("profile key '" + key + "': '" + value + "' is out of range");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw UsageError("profile key '" + key + "': expected true or false, got '" + value + "'");
}

ReportSource to_source(const std::string& value) {
  if (value == "AEL") return ReportSource::AEL;
  if (value == "ATD") return ReportSource::ATD;
  throw UsageError("profile key 'corpus_kind': expected AEL or ATD, got '" + value + "'");
}

std::pair<std::string, std::string> split_assignment(std::string_view line, std::string_view where) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw UsageError(std::string(where) + ": expected 'key = value'");
  std::string key(io::trim(line.substr(0, eq)));
  std::string value(io::trim(line.substr(eq + 1)));
  if (key.empty()) throw UsageError(std::string(where) + ": empty key");
  return {std::move(key), std::move(value)};
}

}  // namespace

RunProfile parse_profile(std::string_view content, const std::filesystem::path& base_dir,
                         const std::vector<std::string>& overrides, std::string_view origin) {
  std::vector<std::pair<std::string, std::string>> entries;
  auto assign = [&](std::pair<std::string, std::string> kv, const std::string& where, bool replace) {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == kv.first; });
    if (it == entries.end()) {
      entries.push_back(std::move(kv));
    } else if (replace) {
      it->second = std::move(kv.second);
    } else {
      throw UsageError(where + ": duplicate key '" + kv.first + "'");
    }
  };

  std::size_t line_no = 0;
  for (const auto raw : io::split_lines(content)) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io::trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    assign(split_assignment(line, where), where, false);
  }
  for (const auto& o : overrides) assign(split_assignment(o, "--set " + o), "--set " + o, true);

  RunProfile p;
  auto path = [&](const std::string& value) {
    std::filesystem::path v(value);
    return v.is_absolute() ? v : (base_dir / v).lexically_normal();
  };
  std::set<std::string> given;

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
      {"name", [&](auto&, auto& v) { p.name = v; }},
      {"config", [&](auto&, auto& v) { p.config = parse_config_kind(v); }},
      {"corpus", [&](auto&, auto& v) { p.corpus = path(v); }},
      {"corpus_kind", [&](auto&, auto& v) { p.corpus_kind = to_source(v); }},
      {"catalog", [&](auto&, auto& v) { p.catalog = path(v); }},
      {"scrub_patterns", [&](auto&, auto& v) { p.scrub_patterns = path(v); }},
      {"output", [&](auto&, auto& v) { p.output = path(v); }},
      {"models", [&](auto&, auto& v) { p.models = split_list(v); }},
      {"summary_model", [&](auto&, auto& v) { p.summary_model = v; }},
      {"augment_model", [&](auto&, auto& v) { p.augment_model = v; }},
      {"gateway_mode", [&](auto&, auto& v) { p.gateway_mode = parse_gateway_mode(v); }},
      {"fixtures", [&](auto&, auto& v) { p.fixtures = path(v); }},
      {"llm_endpoint", [&](auto&, auto& v) { p.llm_endpoint = v; }},
      {"zeroshot_prompt", [&](auto&, auto& v) { p.zeroshot_prompt = path(v); }},
      {"summary_prompt", [&](auto&, auto& v) { p.summary_prompt = path(v); }},
      {"augment_prompt", [&](auto&, auto& v) { p.augment_prompt = path(v); }},
      {"max_words", [&](auto& k, auto& v) { p.max_words = to_unsigned(k, v); }},
      {"summary_chunk_chars", [&](auto& k, auto& v) { p.summary_chunk_chars = to_unsigned(k, v); }},
      {"thresholds",
       [&](auto& k, auto& v) {
         p.thresholds.clear();
         for (const auto& t : split_list(v)) p.thresholds.push_back(to_double(k, t));
       }},
      {"backend",
       [&](auto&, auto& v) {
         if (v == "baseline") {
           p.backend = Backend::Baseline;
         } else if (v == "remote") {
           p.backend = Backend::Remote;
         } else {
           throw UsageError("profile key 'backend': expected baseline or remote, got '" + v + "'");
         }
       }},
      {"baseline_model", [&](auto&, auto& v) { p.baseline_model = path(v); }},
      {"training_set", [&](auto&, auto& v) { p.training_set = path(v); }},
      {"scoring_endpoint", [&](auto&, auto& v) { p.scoring_endpoint = v; }},
      {"epochs", [&](auto& k, auto& v) { p.epochs = static_cast<int>(to_unsigned(k, v)); }},
      {"learning_rate", [&](auto& k, auto& v) { p.learning_rate = to_double(k, v); }},
      {"l2", [&](auto& k, auto& v) { p.l2 = to_double(k, v); }},
      {"min_df", [&](auto& k, auto& v) { p.min_df = to_unsigned(k, v); }},
      {"band_low", [&](auto& k, auto& v) { p.band_low = to_unsigned(k, v); }},
      {"band_high", [&](auto& k, auto& v) { p.band_high = to_unsigned(k, v); }},
      {"max_iterations", [&](auto& k, auto& v) { p.max_iterations = to_unsigned(k, v); }},
      {"match_mode", [&](auto&, auto& v) { p.match_mode = parse_match_mode(v); }},
      {"lenient_parent", [&](auto& k, auto& v) { p.lenient_parent = to_bool(k, v); }},
      {"restrict_top50", [&](auto& k, auto& v) { p.restrict_top50 = to_bool(k, v); }},
      {"strict_audit", [&](auto& k, auto& v) { p.strict_audit = to_bool(k, v); }},
      {"seed", [&](auto& k, auto& v) { p.seed = to_unsigned(k, v); }},
      {"workers", [&](auto& k, auto& v) { p.workers = to_unsigned(k, v); }},
  };

  for (const auto& [key, value] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) throw UsageError(std::string(origin) + ": unknown profile key '" + key + "'");
    it->second(key, value);
    given.insert(key);
  }
  if (!given.contains("config")) throw UsageError(std::string(origin) + ": profile needs a 'config' key");
  if (!given.contains("match_mode")) {
    p.match_mode = p.config == ConfigKind::Cfg1Zeroshot ? MatchMode::NameOrId : MatchMode::NameAndId;
  }
  if (!given.contains("restrict_top50")) p.restrict_top50 = p.config != ConfigKind::Cfg1Zeroshot;
  if (!given.contains("corpus_kind")) {
    p.corpus_kind = p.config == ConfigKind::Cfg1Zeroshot ? ReportSource::AEL : ReportSource::ATD;
  }
  p.echo = std::move(entries);
  validate_profile(p);
  return p;
}

RunProfile load_profile(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  const auto content = io::read_text_file(path);
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  try {
    return parse_profile(content, base, overrides, path.string());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

void validate_profile(const RunProfile& p) {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  need(!p.name.empty(), "'name' is required");
  need(!p.corpus.empty(), "'corpus' is required");
  need(!p.catalog.empty(), "'catalog' is required");
  need(!p.output.empty(), "'output' is required");
  need(p.workers >= 1, "'workers' must be at least 1");

  const bool uses_llm = p.config != ConfigKind::Cfg2Classify;
  if (uses_llm) {
    need(!p.fixtures.empty(), "'fixtures' is required for LLM stages");
    need(p.gateway_mode == GatewayMode::Replay || !p.llm_endpoint.empty(), "'llm_endpoint' is required in LIVE mode");
  }
  if (p.config == ConfigKind::Cfg1Zeroshot) {
    need(!p.models.empty(), "'models' is required for CFG1_ZEROSHOT");
    need(p.zeroshot_prompt.has_value(), "'zeroshot_prompt' is required for CFG1_ZEROSHOT");
  } else {
    need(!p.thresholds.empty(), "'thresholds' is required for CFG2-4");
    for (double t : p.thresholds) need(t > 0.0 && t < 1.0, "thresholds must lie in (0, 1)");
    std::set<double> distinct(p.thresholds.begin(), p.thresholds.end());
    need(distinct.size() == p.thresholds.size(), "thresholds must be distinct");
    if (p.backend == Backend::Remote) {
      need(!p.scoring_endpoint.empty(), "'scoring_endpoint' is required for the remote backend");
    } else {
      need(p.baseline_model || p.training_set, "the baseline backend needs 'baseline_model' or 'training_set'");
    }
    need(p.epochs >= 1, "'epochs' must be positive");
    need(p.learning_rate > 0.0, "'learning_rate' must be positive");
    need(p.l2 >= 0.0, "'l2' must be non-negative");
  }
  if (p.config == ConfigKind::Cfg3SummarizeClassify || p.config == ConfigKind::Cfg4Rebalanced) {
    need(!p.summary_model.empty(), "'summary_model' is required for CFG3/CFG4");
    need(p.summary_prompt.has_value(), "'summary_prompt' is required for CFG3/CFG4");
    need(p.summary_chunk_chars > 0, "'summary_chunk_chars' must be positive");
  }
  if (p.config == ConfigKind::Cfg4Rebalanced) {
    need(!p.augment_model.empty(), "'augment_model' is required for CFG4_REBALANCED");
    need(p.augment_prompt.has_value(), "'augment_prompt' is required for CFG4_REBALANCED");
    need(p.training_set.has_value(), "'training_set' is required for CFG4_REBALANCED");
    need(!p.baseline_model, "'baseline_model' cannot be used with CFG4_REBALANCED (the model is retrained)");
    need(p.max_iterations >= 1, "'max_iterations' must be positive");
  }
  need(p.band_low.has_value() == p.band_high.has_value(), "'band_low' and 'band_high' go together");
  if (p.band_low && p.band_high) need(*p.band_low > 0 && *p.band_low <= *p.band_high, "need 0 < band_low <= band_high");

  if (!problems.empty()) {
    std::string msg = "invalid profile '" + p.name + "':";
    for (const auto& problem : problems) msg += "\n  " + problem;
    throw UsageError(msg);
  }
}

}  // namespace ttpx
