#include <algorithm>

#include <json.hpp>

#include "ttpx/error.hpp"
#include "ttpx/pipeline.hpp"

namespace ttpx {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json metrics_json(const EvalMetrics& m) {
  return ordered_json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

EvalMetrics metrics_from(const ordered_json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

ordered_json strings_json(const std::vector<std::string>& v) { return ordered_json(v); }

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  ordered_json j;
  j["profile"] = report.profile_name;
  j["config"] = to_string(report.config);
  j["match_mode"] = to_string(report.match_mode);
  auto echo = ordered_json::array();
  for (const auto& [k, v] : report.profile_echo) echo.push_back(ordered_json::array({k, v}));
  j["profile_echo"] = std::move(echo);

  auto blocks = ordered_json::array();
  for (const auto& b : report.blocks) {
    ordered_json block;
    block["label"] = b.label;
    block["model"] = b.model;
    block["threshold"] = b.threshold ? ordered_json(*b.threshold) : ordered_json(nullptr);
    auto rows = ordered_json::array();
    for (const auto& r : b.reports) {
      ordered_json row{{"report_id", r.report_id}, {"ground_truth", r.ground_truth}, {"tp", r.counts.tp},
                       {"fp", r.counts.fp},        {"fn", r.counts.fn}};
      row.update(metrics_json(r.metrics));
      rows.push_back(std::move(row));
    }
    block["reports"] = std::move(rows);
    block["macro"] = b.macro ? metrics_json(*b.macro) : ordered_json(nullptr);
    auto techniques = ordered_json::array();
    for (const auto& t : b.per_technique) {
      ordered_json row{{"technique_id", t.id.str()}, {"support", t.support}, {"tp", t.counts.tp},
                       {"fp", t.counts.fp},          {"fn", t.counts.fn}};
      row.update(metrics_json(t.metrics));
      techniques.push_back(std::move(row));
    }
    block["per_technique"] = std::move(techniques);
    blocks.push_back(std::move(block));
  }
  j["blocks"] = std::move(blocks);
  j["flags"] = strings_json(report.flags);
  j["skipped"] = strings_json(report.skipped);
  j["warnings"] = strings_json(report.warnings);
  j["audit"] = strings_json(report.audit);
  return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(std::string_view text, std::string_view origin) {
  try {
    const auto j = ordered_json::parse(text);
    EvalReport r;
    r.profile_name = j.at("profile").get<std::string>();
    r.config = parse_config_kind(j.at("config").get<std::string>());
    r.match_mode = parse_match_mode(j.at("match_mode").get<std::string>());
    for (const auto& kv : j.at("profile_echo")) {
      r.profile_echo.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    }
    for (const auto& jb : j.at("blocks")) {
      EvalBlock b;
      b.label = jb.at("label").get<std::string>();
      b.model = jb.at("model").get<std::string>();
      if (!jb.at("threshold").is_null()) b.threshold = jb.at("threshold").get<double>();
      for (const auto& jr : jb.at("reports")) {
        ReportRow row;
        row.report_id = jr.at("report_id").get<std::string>();
        row.ground_truth = jr.at("ground_truth").get<std::size_t>();
        row.counts = {row.report_id, jr.at("tp").get<std::size_t>(), jr.at("fp").get<std::size_t>(),
                      jr.at("fn").get<std::size_t>()};
        row.metrics = metrics_from(jr);
        b.reports.push_back(std::move(row));
      }
      if (!jb.at("macro").is_null()) b.macro = metrics_from(jb.at("macro"));
      for (const auto& jt : jb.at("per_technique")) {
        TechniqueRow t{TechniqueId(jt.at("technique_id").get<std::string>()), {}, {}, jt.at("support").get<std::size_t>()};
        t.counts = {t.id.str(), jt.at("tp").get<std::size_t>(), jt.at("fp").get<std::size_t>(),
                    jt.at("fn").get<std::size_t>()};
        t.metrics = metrics_from(jt);
        b.per_technique.push_back(std::move(t));
      }
      r.blocks.push_back(std::move(b));
    }
    r.flags = j.at("flags").get<std::vector<std::string>>();
    r.skipped = j.at("skipped").get<std::vector<std::string>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.audit = j.at("audit").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string(origin) + ": malformed evaluation report: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string(origin) + ": " + e.what());
  }
}

std::vector<std::string> audit_report(const EvalReport& report) {
  std::vector<std::string> out;
  auto same = [](const EvalMetrics& a, const EvalMetrics& b) {
    return a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1;
  };
  for (const auto& b : report.blocks) {
    std::vector<EvalMetrics> rows;
    for (const auto& r : b.reports) {
      if (r.counts.tp + r.counts.fn != r.ground_truth) {
        out.push_back(b.label + " / " + r.report_id + ": tp + fn = " + std::to_string(r.counts.tp + r.counts.fn) +
                      " but ground truth is " + std::to_string(r.ground_truth));
      }
      if (!same(r.metrics, prf(r.counts))) out.push_back(b.label + " / " + r.report_id + ": metrics do not follow from counts");
      rows.push_back(r.metrics);
    }
    if (rows.empty() != !b.macro.has_value()) {
      out.push_back(b.label + ": macro row presence does not match the report rows");
    } else if (b.macro && !same(*b.macro, macro_average(rows))) {
      out.push_back(b.label + ": macro row differs from the mean of the per-report rows");
    }
    for (const auto& t : b.per_technique) {
      if (t.counts.tp + t.counts.fn != t.support) {
        out.push_back(b.label + " / " + t.id.str() + ": tp + fn differs from support");
      }
    }
  }
  return out;
}

TableFormat parse_table_format(std::string_view text) {
  if (text == "text" || text == "TEXT") return TableFormat::Text;
  if (text == "csv" || text == "CSV") return TableFormat::Csv;
  if (text == "markdown" || text == "MARKDOWN" || text == "md") return TableFormat::Markdown;
  throw UsageError("unknown table format '" + std::string(text) + "' (text, csv, markdown)");
}

std::string count_cell(std::size_t fn, std::size_t fp) {
  const std::string left = fn == 0 ? "0" : "-" + std::to_string(fn);
  const std::string right = fp == 0 ? "0" : "+" + std::to_string(fp);
  return left + " / " + right;
}

namespace {

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string f4(double v) { return format_fixed(v, 4); }

std::vector<Table> build_tables(const EvalReport& report) {
  std::vector<std::string> report_ids;
  std::map<std::string, std::size_t> truth_size;
  for (const auto& b : report.blocks) {
    for (const auto& r : b.reports) {
      if (truth_size.emplace(r.report_id, r.ground_truth).second) report_ids.push_back(r.report_id);
    }
  }
  auto find_row = [](const EvalBlock& b, const std::string& id) -> const ReportRow* {
    for (const auto& r : b.reports) {
      if (r.report_id == id) return &r;
    }
    return nullptr;
  };

  std::vector<Table> tables;
  Table counts{"Counts (-FN / +FP)", {"Report"}, {}};
  Table tps{"True positives", {"Report", "Ground Truth"}, {}};
  for (const auto& b : report.blocks) {
    counts.header.push_back(b.label);
    tps.header.push_back(b.label);
  }
  for (const auto& id : report_ids) {
    std::vector<std::string> c{id};
    std::vector<std::string> t{id, std::to_string(truth_size[id])};
    for (const auto& b : report.blocks) {
      const auto* row = find_row(b, id);
      c.push_back(row ? count_cell(row->counts.fn, row->counts.fp) : "");
      t.push_back(row ? std::to_string(row->counts.tp) : "");
    }
    counts.rows.push_back(std::move(c));
    tps.rows.push_back(std::move(t));
  }
  tables.push_back(std::move(counts));
  tables.push_back(std::move(tps));

  Table macro{"Average performance", {"Method", "Precision", "Recall", "F1-Score"}, {}};
  Table per_report{"Per-report metrics", {"Method", "Report", "Precision", "Recall", "F1-Score"}, {}};
  for (const auto& b : report.blocks) {
    if (b.macro) macro.rows.push_back({b.label, f4(b.macro->precision), f4(b.macro->recall), f4(b.macro->f1)});
    for (const auto& r : b.reports) {
      per_report.rows.push_back({b.label, r.report_id, f4(r.metrics.precision), f4(r.metrics.recall), f4(r.metrics.f1)});
    }
  }
  tables.push_back(std::move(macro));
  tables.push_back(std::move(per_report));

  for (const auto& b : report.blocks) {
    if (b.per_technique.empty()) continue;
    Table t{"Per-technique results (" + b.label + ")", {"Technique", "Precision", "Recall", "F1-Score", "Support"}, {}};
    for (const auto& row : b.per_technique) {
      t.rows.push_back({row.id.str(), f4(row.metrics.precision), f4(row.metrics.recall), f4(row.metrics.f1),
                        std::to_string(row.support)});
    }
    tables.push_back(std::move(t));
  }

  Table notes{"Notes", {"Kind", "Message"}, {}};
  for (const auto& s : report.flags) notes.rows.push_back({"flag", s});
  for (const auto& s : report.skipped) notes.rows.push_back({"skipped", s});
  for (const auto& s : report.warnings) notes.rows.push_back({"warning", s});
  for (const auto& s : report.audit) notes.rows.push_back({"audit", s});
  tables.push_back(std::move(notes));
  return tables;
}

std::string render_text(const std::vector<Table>& tables) {
  std::string out;
  for (const auto& t : tables) {
    std::size_t width = t.header.front().size();
    for (const auto& row : t.rows) width = std::max(width, row.front().size());
    auto line = [&](const std::vector<std::string>& cells) {
      std::string s = cells.front();
      s.append(width - cells.front().size(), ' ');
      for (std::size_t i = 1; i < cells.size(); ++i) s += " | " + cells[i];
      return s + "\n";
    };
    out += "== " + t.title + " ==\n";
    out += line(t.header);
    for (const auto& row : t.rows) out += line(row);
    out += "\n";
  }
  return out;
}

std::string md_escape(const std::string& cell) {
  std::string out;
  for (char c : cell) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string render_markdown(const std::vector<Table>& tables) {
  std::string out;
  for (const auto& t : tables) {
    auto line = [](const std::vector<std::string>& cells) {
      std::string s = "|";
      for (const auto& c : cells) s += " " + md_escape(c) + " |";
      return s + "\n";
    };
    out += "### " + t.title + "\n\n";
    out += line(t.header);
    out += "|";
    for (std::size_t i = 0; i < t.header.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& row : t.rows) out += line(row);
    out += "\n";
  }
  return out;
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Long format: one line per cell.
std::string render_csv(const std::vector<Table>& tables) {
  std::string out = "table,row,column,value\n";
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      for (std::size_t i = 1; i < row.size(); ++i) {
        out += csv_quote(t.title) + "," + csv_quote(row.front()) + "," + csv_quote(t.header[i]) + "," + csv_quote(row[i]) + "\n";
      }
    }
  }
  return out;
}

}  // namespace

std::string render_tables(const EvalReport& report, TableFormat format) {
  const auto tables = build_tables(report);
  switch (format) {
    case TableFormat::Text: return render_text(tables);
    case TableFormat::Markdown: return render_markdown(tables);
    case TableFormat::Csv: return render_csv(tables);
  }
  return {};
}

}  // namespace ttpx
