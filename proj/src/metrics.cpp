#include "ttpx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"
#include "ttpx/random.hpp"

namespace ttpx {

std::string_view to_string(MatchMode mode) noexcept {
  return mode == MatchMode::NameOrId ? "NAME_OR_ID" : "NAME_AND_ID";
}

MatchMode parse_match_mode(std::string_view text) {
  if (text == "NAME_OR_ID") return MatchMode::NameOrId;
  if (text == "NAME_AND_ID") return MatchMode::NameAndId;
  throw UsageError("unknown match mode '" + std::string(text) + "' (expected NAME_OR_ID or NAME_AND_ID)");
}

std::string_view to_string(ClaimStatus status) noexcept {
  switch (status) {
    case ClaimStatus::Reproduced: return "REPRODUCED";
    case ClaimStatus::Mismatch: return "MISMATCH";
    case ClaimStatus::Withheld: return "WITHHELD";
    case ClaimStatus::NoReference: return "NO_REFERENCE";
  }
  return "?";
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

namespace {

struct Key {
  std::optional<TechniqueId> id;
  std::string name;  // normalized

  auto operator<=>(const Key&) const = default;
};

std::vector<Key> unique_keys(const std::vector<TechniqueRef>& refs) {
  std::vector<Key> out;
  for (const auto& r : refs) {
    Key k{r.id, normalize_name(r.name)};
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
  }
  return out;
}

bool ids_match(const std::optional<TechniqueId>& a, const std::optional<TechniqueId>& b, bool lenient) {
  if (!a || !b) return false;
  if (*a == *b) return true;
  if (!lenient) return false;
  return (a->is_subtechnique() && a->parent() == *b) || (b->is_subtechnique() && b->parent() == *a);
}

bool names_match(const std::string& a, const std::string& b) { return !a.empty() && a == b; }

}  // namespace

EvalCounts match_counts(const std::vector<TechniqueRef>& predicted, const std::vector<TechniqueRef>& truth,
                        const MatchOptions& options) {
  const auto pred = unique_keys(predicted);
  const auto gold = unique_keys(truth);

  std::vector<std::vector<std::size_t>> edges(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      const bool id_ok = ids_match(pred[i].id, gold[j].id, options.lenient_parent);
      const bool name_ok = names_match(pred[i].name, gold[j].name);
      const bool ok = options.mode == MatchMode::NameOrId ? (id_ok || name_ok) : (id_ok && name_ok);
      if (ok) edges[i].push_back(j);
    }
  }

  // Kuhn's augmenting paths.
  std::vector<std::ptrdiff_t> owner(gold.size(), -1);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<char> seen(gold.size(), 0);
    std::function<bool(std::size_t)> augment = [&](std::size_t u) {
      for (std::size_t v : edges[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        if (owner[v] < 0 || augment(static_cast<std::size_t>(owner[v]))) {
          owner[v] = static_cast<std::ptrdiff_t>(u);
          return true;
        }
      }
      return false;
    };
    if (augment(i)) ++matched;
  }

  EvalCounts c;
  c.tp = matched;
  c.fp = pred.size() - matched;
  c.fn = gold.size() - matched;
  return c;
}

EvalMetrics prf(const EvalCounts& c) {
  EvalMetrics m;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

EvalMetrics macro_average(const std::vector<EvalMetrics>& items) {
  if (items.empty()) throw UsageError("macro average of an empty list");
  EvalMetrics sum;
  for (const auto& m : items) {
    sum.precision += m.precision;
    sum.recall += m.recall;
    sum.f1 += m.f1;
  }
  const auto n = static_cast<double>(items.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

std::map<TechniqueId, TechniqueScore> per_technique_metrics(const std::vector<std::set<TechniqueId>>& predicted,
                                                           const std::vector<std::set<TechniqueId>>& truth) {
  if (predicted.size() != truth.size()) {
    throw UsageError("per-technique metrics need aligned sentences: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " truths");
  }
  std::map<TechniqueId, TechniqueScore> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (const auto& id : truth[i]) {
      auto& s = out[id];
      ++s.support;
      if (predicted[i].contains(id)) {
        ++s.counts.tp;
      } else {
        ++s.counts.fn;
      }
    }
    for (const auto& id : predicted[i]) {
      if (!truth[i].contains(id)) ++out[id].counts.fp;
    }
  }
  for (auto& [id, s] : out) {
    s.counts.report_id = id.str();
    s.metrics = prf(s.counts);
  }
  return out;
}

std::vector<std::size_t> kfold_assign(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (k < 2 || k > n) {
    throw UsageError("k-fold needs 2 <= k <= " + std::to_string(n) + "; got k=" + std::to_string(k));
  }

  SeededRng rng(seed);
  const auto order = rng.permutation(n);

  std::map<TechniqueId, std::vector<std::size_t>> by_label;
  for (std::size_t pos : order) {
    for (const auto& id : dataset.sentences[pos].labels) by_label[id].push_back(pos);
  }

  const double share = 1.0 / static_cast<double>(k);
  std::vector<double> desired_total(k, static_cast<double>(n) * share);
  std::map<TechniqueId, std::vector<double>> desired;
  std::map<TechniqueId, std::size_t> remaining;
  for (const auto& [id, members] : by_label) {
    desired[id].assign(k, static_cast<double>(members.size()) * share);
    remaining[id] = members.size();
  }

  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> fold(n, kUnassigned);

  auto place = [&](std::size_t pos, std::size_t f) {
    fold[pos] = f;
    desired_total[f] -= 1.0;
    for (const auto& id : dataset.sentences[pos].labels) {
      desired[id][f] -= 1.0;
      --remaining[id];
    }
  };

  auto best_fold = [&](const std::vector<double>* label_desired) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < k; ++f) {
      if (label_desired != nullptr) {
        const double a = (*label_desired)[f];
        const double b = (*label_desired)[best];
        if (a > b + 1e-12) {
          best = f;
          continue;
        }
        if (a < b - 1e-12) continue;
      }
      if (desired_total[f] > desired_total[best] + 1e-12) best = f;
    }
    return best;
  };

  for (;;) {
    // Rarest label with unassigned members; ties broken by ID.
    const TechniqueId* rarest = nullptr;
    std::size_t fewest = 0;
    for (const auto& [id, left] : remaining) {
      if (left == 0) continue;
      if (rarest == nullptr || left < fewest) {
        rarest = &id;
        fewest = left;
      }
    }
    if (rarest == nullptr) break;
    const TechniqueId label = *rarest;
    for (std::size_t pos : by_label[label]) {
      if (fold[pos] != kUnassigned) continue;
      place(pos, best_fold(&desired[label]));
    }
  }

  for (std::size_t pos : order) {
    if (fold[pos] == kUnassigned) place(pos, best_fold(nullptr));
  }
  return fold;
}

std::vector<Fold> kfold_split(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed) {
  const auto fold = kfold_assign(dataset, k, seed);
  std::vector<Fold> out(k);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (f == fold[i] ? out[f].test : out[f].train).sentences.push_back(dataset.sentences[i]);
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(io::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Fn>
void for_each_csv_record(std::string_view content, std::string_view origin, const std::vector<std::string>& header,
                         Fn&& fn) {
  bool seen_header = false;
  std::size_t line_no = 0;
  for (const auto line : io::split_lines(content)) {
    ++line_no;
    const auto trimmed = io::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto fields = split_csv_line(trimmed);
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (!seen_header) {
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw DataError(where + ": expected header '" + expected + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    fn(fields, where);
  }
  if (!seen_header) throw DataError(std::string(origin) + ": missing header");
}

std::size_t parse_count(const std::string& text, const std::string& where) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError(where + ": '" + text + "' is not a non-negative integer");
  }
  return std::stoul(text);
}

double parse_unit(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v) && v >= 0.0 && v <= 1.0) return v;
  } catch (const std::exception&) {
  }
  throw DataError(where + ": '" + text + "' is not a number in [0,1]");
}

}  // namespace

std::vector<CountsRow> parse_counts_csv(std::string_view content, std::string_view origin) {
  std::vector<CountsRow> rows;
  for_each_csv_record(content, origin, {"model", "report", "ground_truth", "tp", "fp", "fn"},
                      [&](const std::vector<std::string>& f, const std::string& where) {
                        if (f[0].empty() || f[1].empty()) throw DataError(where + ": model and report are required");
                        rows.push_back({f[0], f[1], parse_count(f[2], where), parse_count(f[3], where),
                                        parse_count(f[4], where), parse_count(f[5], where)});
                      });
  return rows;
}

std::map<std::string, EvalMetrics> parse_reference_csv(std::string_view content, std::string_view origin) {
  std::map<std::string, EvalMetrics> out;
  for_each_csv_record(content, origin, {"model", "precision", "recall", "f1"},
                      [&](const std::vector<std::string>& f, const std::string& where) {
                        EvalMetrics m{parse_unit(f[1], where), parse_unit(f[2], where), parse_unit(f[3], where)};
                        if (!out.emplace(f[0], m).second) throw DataError(where + ": duplicate model '" + f[0] + "'");
                      });
  return out;
}

std::vector<AuditFinding> audit_counts(const std::vector<CountsRow>& rows) {
  std::vector<AuditFinding> out;
  for (const auto& r : rows) {
    if (r.tp + r.fn != r.ground_truth) {
      out.push_back({r.model, r.report,
                     "tp + fn = " + std::to_string(r.tp + r.fn) + " but ground truth is " + std::to_string(r.ground_truth)});
    }
  }
  return out;
}

std::vector<ReproductionClaim> reproduction_claims(const std::vector<CountsRow>& rows,
                                                   const std::map<std::string, EvalMetrics>& reference,
                                                   const ClaimTolerance& tolerance) {
  std::vector<std::string> models;
  std::map<std::string, std::vector<EvalMetrics>> per_model;
  for (const auto& r : rows) {
    if (!per_model.contains(r.model)) models.push_back(r.model);
    per_model[r.model].push_back(prf(EvalCounts{r.report, r.tp, r.fp, r.fn}));
  }
  const auto findings = audit_counts(rows);

  std::vector<ReproductionClaim> out;
  for (const auto& model : models) {
    ReproductionClaim claim;
    claim.model = model;
    claim.derived = macro_average(per_model[model]);
    if (auto it = reference.find(model); it != reference.end()) claim.reference = it->second;

    for (const auto& f : findings) {
      if (f.model == model) claim.notes.push_back(f.report + ": " + f.message);
    }
    if (!claim.notes.empty()) {
      claim.status = ClaimStatus::Withheld;
    } else if (!claim.reference) {
      claim.status = ClaimStatus::NoReference;
    } else {
      const auto& ref = *claim.reference;
      const int d = tolerance.pr_decimals;
      if (format_fixed(claim.derived.precision, d) != format_fixed(ref.precision, d)) {
        claim.notes.push_back("precision " + format_fixed(claim.derived.precision, d + 2) + " does not round to " +
                              format_fixed(ref.precision, d));
      }
      if (format_fixed(claim.derived.recall, d) != format_fixed(ref.recall, d)) {
        claim.notes.push_back("recall " + format_fixed(claim.derived.recall, d + 2) + " does not round to " +
                              format_fixed(ref.recall, d));
      }
      if (std::fabs(claim.derived.f1 - ref.f1) > tolerance.f1_tolerance + 1e-12) {
        claim.notes.push_back("f1 " + format_fixed(claim.derived.f1, d + 2) + " differs from " + format_fixed(ref.f1, d) +
                              " by more than " + format_fixed(tolerance.f1_tolerance, d));
      }
      claim.status = claim.notes.empty() ? ClaimStatus::Reproduced : ClaimStatus::Mismatch;
    }
    out.push_back(std::move(claim));
  }
  return out;
}

}  // namespace ttpx
