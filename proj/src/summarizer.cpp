#include "ttpx/summarizer.hpp"

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

std::vector<std::string> chunk_paragraphs(std::string_view body, std::size_t chunk_chars) {
  if (chunk_chars == 0) throw UsageError("chunk size must be positive");

  std::vector<std::string_view> paragraphs;
  std::size_t start = 0;
  while (start < body.size()) {
    auto split = body.find("\n\n", start);
    if (split == std::string_view::npos) split = body.size();
    const auto para = io::trim(body.substr(start, split - start));
    if (!para.empty()) paragraphs.push_back(para);
    start = split + 2;
  }

  std::vector<std::string> chunks;
  std::string current;
  for (auto para : paragraphs) {
    const std::size_t needed = current.empty() ? para.size() : current.size() + 2 + para.size();
    if (!current.empty() && needed > chunk_chars) {
      chunks.push_back(std::move(current));
      current.clear();
    }
    if (!current.empty()) current += "\n\n";
    current.append(para);
  }
  if (!current.empty()) chunks.push_back(std::move(current));
  return chunks;
}

std::vector<LlmRequest> summary_requests(const CleanReport& report, const SummarizerOptions& options) {
  if (io::trim(report.body).empty()) throw DataError("report '" + report.report_id + "' has an empty body");
  std::vector<LlmRequest> requests;
  for (const auto& chunk : chunk_paragraphs(report.body, options.chunk_chars)) {
    requests.push_back(LlmRequest{options.model, options.prompt.system,
                                  options.prompt.render_user({{"report", chunk}}), options.temperature,
                                  options.max_tokens});
  }
  return requests;
}

SummarisedReport summarize_report(const CleanReport& report, LlmGateway& gateway, const SummarizerOptions& options,
                                  const ScrubOptions& scrub_options) {
  const auto requests = summary_requests(report, options);

  std::string joined;
  for (const auto& request : requests) {
    const auto response = gateway.complete(request);
    const auto text = io::trim(response.text);
    if (text.empty()) continue;
    if (!joined.empty()) joined += "\n\n";
    joined.append(text);
  }

  SummarisedReport out;
  out.report_id = report.report_id;
  out.source_mode = gateway.mode();
  out.chunks = requests.size();
  out.summary = scrub(joined, scrub_options).body;
  if (out.summary.empty()) throw UpstreamError("summary of report '" + report.report_id + "' is empty");
  if (out.summary.size() > report.body.size()) {
    out.summary = report.body;
    out.fell_back_to_body = true;
  }
  out.compression_ratio = static_cast<double>(out.summary.size()) / static_cast<double>(report.body.size());
  return out;
}

}  // namespace ttpx
