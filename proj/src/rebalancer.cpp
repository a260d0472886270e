#include "ttpx/rebalancer.hpp"

#include <algorithm>
#include <exception>
#include <sstream>
#include <unordered_set>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/random.hpp"

namespace ttpx {

ClassHistogram class_histogram(const LabeledDataset& dataset) {
  ClassHistogram hist;
  for (const auto& s : dataset.sentences) {
    for (const auto& id : s.labels) ++hist[id];
  }
  return hist;
}

Band default_band(const ClassHistogram& hist) {
  if (hist.empty()) throw DataError("cannot derive a band from an empty histogram");
  std::vector<std::size_t> counts;
  for (const auto& [id, n] : hist) counts.push_back(n);
  std::sort(counts.begin(), counts.end());
  const std::size_t median = std::max<std::size_t>(counts[(counts.size() - 1) / 2], 1);
  return {median, 2 * median};
}

namespace {

void check_band(Band band) {
  if (band.low == 0 || band.low > band.high) {
    throw UsageError("invalid band (" + std::to_string(band.low) + ", " + std::to_string(band.high) +
                     "): need 0 < low <= high");
  }
}

}  // namespace

RebalancePlan build_plan(const ClassHistogram& hist, Band band, std::uint64_t seed) {
  check_band(band);
  RebalancePlan plan;
  plan.band = band;
  plan.seed = seed;
  for (const auto& [id, n] : hist) {
    if (n > band.high) {
      plan.downsample[id] = band.high;
    } else if (n < band.low) {
      plan.augment[id] = band.low - n;
    }
  }
  return plan;
}

std::string export_plan(const RebalancePlan& plan) {
  std::ostringstream out;
  out << "band " << plan.band.low << ' ' << plan.band.high << '\n';
  out << "seed " << plan.seed << '\n';
  for (const auto& [id, keep] : plan.downsample) out << "downsample " << id.str() << ' ' << keep << '\n';
  for (const auto& [id, n] : plan.augment) out << "augment " << id.str() << ' ' << n << '\n';
  return out.str();
}

RebalancePlan import_plan(std::string_view text, std::string_view origin) {
  RebalancePlan plan;
  bool have_band = false;
  bool have_seed = false;
  std::size_t line_no = 0;
  for (const auto raw : io::split_lines(text)) {
    ++line_no;
    const auto line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    std::istringstream in{std::string(line)};
    std::string verb;
    in >> verb;
    auto read_count = [&]() {
      long long v = -1;
      if (!(in >> v) || v < 0) throw DataError(where + ": expected a non-negative integer");
      return static_cast<std::size_t>(v);
    };
    auto read_id = [&]() {
      std::string token;
      in >> token;
      auto id = TechniqueId::parse(token);
      if (!id) throw DataError(where + ": '" + token + "' is not a technique ID");
      return *id;
    };
    if (verb == "band") {
      plan.band.low = read_count();
      plan.band.high = read_count();
      have_band = true;
    } else if (verb == "seed") {
      if (!(in >> plan.seed)) throw DataError(where + ": expected a seed");
      have_seed = true;
    } else if (verb == "downsample" || verb == "augment") {
      const auto id = read_id();
      const auto n = read_count();
      auto& target = verb == "downsample" ? plan.downsample : plan.augment;
      if (!target.emplace(id, n).second) throw DataError(where + ": duplicate " + verb + " entry for " + id.str());
    } else {
      throw DataError(where + ": unknown directive '" + verb + "'");
    }
    std::string rest;
    if (in >> rest) throw DataError(where + ": trailing text '" + rest + "'");
  }
  if (!have_band || !have_seed) throw DataError(std::string(origin) + ": plan needs both 'band' and 'seed'");
  try {
    check_band(plan.band);
  } catch (const UsageError& e) {
    throw DataError(std::string(origin) + ": " + e.what());
  }
  for (const auto& [id, n] : plan.augment) {
    if (n == 0) throw DataError(std::string(origin) + ": augment count for " + id.str() + " must be positive");
    if (plan.downsample.contains(id)) throw DataError(std::string(origin) + ": " + id.str() + " is both downsampled and augmented");
  }
  return plan;
}

LabeledDataset apply_plan(const LabeledDataset& dataset, const RebalancePlan& plan,
                          const std::vector<LabeledSentence>& synthetic, const std::set<TechniqueId>& allowed,
                          ApplyReport* report, const ScrubOptions& scrub_options) {
  check_band(plan.band);
  validate_unique_ids(dataset);
  ApplyReport local;

  std::unordered_set<std::string> ids;
  for (const auto& s : dataset.sentences) ids.insert(s.sentence_id);
  for (const auto& s : synthetic) {
    if (s.provenance != Provenance::Synthetic) throw DataError("sentence '" + s.sentence_id + "' is not marked synthetic");
    if (s.labels.empty()) throw DataError("synthetic sentence '" + s.sentence_id + "' has no labels");
    for (const auto& id : s.labels) {
      if (!allowed.contains(id)) {
        throw DataError("synthetic sentence '" + s.sentence_id + "' has label " + id.str() + " outside the top-50 set");
      }
    }
  }

  const std::size_t low = plan.band.low;
  auto current = class_histogram(dataset);
  std::vector<char> keep(dataset.size(), 1);

  SeededRng rng(plan.seed);
  for (const auto& [cls, target] : plan.downsample) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (keep[i] && dataset.sentences[i].labels.contains(cls)) members.push_back(i);
    }
    rng.shuffle(members);
    for (std::size_t i : members) {
      if (current[cls] <= target) break;
      const auto& labels = dataset.sentences[i].labels;
      const bool protected_sentence =
          std::any_of(labels.begin(), labels.end(), [&](const TechniqueId& id) { return current[id] <= low; });
      if (protected_sentence) continue;
      keep[i] = 0;
      ++local.removed;
      for (const auto& id : labels) --current[id];
    }
    if (current[cls] > target) {
      local.warnings.push_back("downsample " + cls.str() + ": kept " + std::to_string(current[cls]) + ", target " +
                               std::to_string(target) + " (remaining sentences are protected)");
    }
  }

  LabeledDataset out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    seen.insert(normalize_for_dedup(dataset.sentences[i].text));
    if (keep[i]) out.sentences.push_back(dataset.sentences[i]);
  }

  std::vector<char> used(synthetic.size(), 0);
  for (const auto& [cls, count] : plan.augment) {
    std::size_t added = 0;
    for (std::size_t j = 0; j < synthetic.size() && added < count; ++j) {
      if (used[j] || !synthetic[j].labels.contains(cls)) continue;
      const auto& labels = synthetic[j].labels;
      if (std::any_of(labels.begin(), labels.end(), [&](const TechniqueId& id) { return current[id] >= low; })) continue;
      if (ids.contains(synthetic[j].sentence_id)) {
        used[j] = 1;
        continue;
      }
      auto cleaned = scrub(synthetic[j].text, scrub_options).body;
      if (io::trim(cleaned).empty()) {
        used[j] = 1;
        continue;
      }
      if (!seen.insert(normalize_for_dedup(cleaned)).second) {
        used[j] = 1;
        ++local.duplicates;
        continue;
      }
      used[j] = 1;
      LabeledSentence s = synthetic[j];
      s.text = std::move(cleaned);
      ids.insert(s.sentence_id);
      for (const auto& id : labels) ++current[id];
      out.sentences.push_back(std::move(s));
      ++added;
      ++local.added;
    }
    if (added < count) {
      local.warnings.push_back("augment " + cls.str() + ": added " + std::to_string(added) + " of " +
                               std::to_string(count) + " (partial fill)");
    }
  }

  if (report != nullptr) *report = std::move(local);
  return out;
}

RebalanceOutcome rebalance(const LabeledDataset& dataset, const std::vector<LabeledSentence>& synthetic_pool,
                           const std::set<TechniqueId>& allowed, const RebalanceOptions& options) {
  check_band(options.band);
  RebalanceOutcome outcome;
  outcome.dataset = dataset;

  auto histogram = [&](const LabeledDataset& d) {
    auto h = class_histogram(d);
    for (const auto& id : options.label_space) h.try_emplace(id, 0);
    return h;
  };
  outcome.before = histogram(dataset);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const auto plan = build_plan(histogram(outcome.dataset), options.band, options.seed + iter);
    if (plan.empty()) break;
    ApplyReport step;
    auto next = apply_plan(outcome.dataset, plan, synthetic_pool, allowed, &step);
    const bool changed = step.removed > 0 || step.added > 0;
    outcome.totals.removed += step.removed;
    outcome.totals.added += step.added;
    outcome.totals.duplicates += step.duplicates;
    if (changed) {
      outcome.plans.push_back(plan);
      outcome.dataset = std::move(next);
    }
    // Warnings from the last pass describe what could not be fixed.
    outcome.totals.warnings = std::move(step.warnings);
    if (!changed) break;
  }

  outcome.after = histogram(outcome.dataset);
  for (const auto& [id, n] : outcome.after) {
    if (n < options.band.low || n > options.band.high) {
      outcome.residual.push_back(id.str() + " has " + std::to_string(n) + " sentences, outside [" +
                                 std::to_string(options.band.low) + ", " + std::to_string(options.band.high) + "]");
    }
  }
  return outcome;
}

std::vector<std::string> pick_exemplars(const LabeledDataset& dataset, const TechniqueId& id, std::size_t count,
                                        std::uint64_t seed) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.sentences[i].labels.contains(id)) members.push_back(i);
  }
  SeededRng rng(seed);
  rng.shuffle(members);
  members.resize(std::min(members.size(), count));
  std::sort(members.begin(), members.end());
  std::vector<std::string> out;
  for (std::size_t i : members) out.push_back(dataset.sentences[i].text);
  return out;
}

LlmRequest augmentation_request(const Technique& technique, std::size_t count, const std::vector<std::string>& exemplars,
                                const AugmentOptions& options) {
  std::string block;
  for (const auto& e : exemplars) block += "- " + e + "\n";
  if (block.empty()) block = "(none)\n";
  LlmRequest r;
  r.model = options.model;
  r.system_prompt = options.prompt.system;
  r.user_prompt = options.prompt.render_user(
      {{"count", std::to_string(count)}, {"technique_name", technique.name}, {"exemplars", block}});
  r.temperature = options.temperature;
  r.max_tokens = options.max_tokens;
  return r;
}

std::vector<std::string> parse_generated_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const auto raw : io::split_lines(text)) {
    auto line = io::trim(raw);
    if (line.empty() || line.back() == ':') continue;
    if (line.starts_with("- ") || line.starts_with("* ")) {
      line = io::trim(line.substr(2));
    } else {
      std::size_t i = 0;
      while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
      if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') {
        line = io::trim(line.substr(i + 2));
      }
    }
    if (line.size() >= 2 && line.front() == '"' && line.back() == '"') line = io::trim(line.substr(1, line.size() - 2));
    if (!line.empty()) out.emplace_back(line);
  }
  return out;
}

std::vector<LabeledSentence> generate_synthetic(const LabeledDataset& dataset, const RebalancePlan& plan,
                                                const TechniqueCatalog& catalog, LlmGateway& gateway,
                                                const AugmentOptions& options) {
  std::vector<std::pair<TechniqueId, std::size_t>> targets(plan.augment.begin(), plan.augment.end());
  std::vector<LlmRequest> requests;
  for (const auto& [id, count] : targets) {
    const Technique* t = catalog.find(id);
    if (t == nullptr) throw DataError("augment target " + id.str() + " is not in the catalog");
    requests.push_back(augmentation_request(*t, count, pick_exemplars(dataset, id, options.exemplars, plan.seed), options));
  }

  std::vector<std::string> replies(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(requests.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      replies[i] = gateway.complete(requests[i]).text;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<LabeledSentence> out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::size_t n = 0;
    for (auto& text : parse_generated_sentences(replies[i])) {
      LabeledSentence s;
      s.sentence_id = "syn:" + targets[i].first.str() + ":" + std::to_string(++n);
      s.report_id = "synthetic";
      s.text = std::move(text);
      s.labels = {targets[i].first};
      s.provenance = Provenance::Synthetic;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace ttpx
