#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ttpx/llm_gateway.hpp"
#include "ttpx/prompt.hpp"
#include "ttpx/textprep.hpp"

namespace ttpx {

struct SummarisedReport {
  std::string report_id;
  std::string summary;
  double compression_ratio = 1.0;  // summary bytes / body bytes
  GatewayMode source_mode = GatewayMode::Replay;
  std::size_t chunks = 0;
  bool fell_back_to_body = false;  // model output was longer than its input
};

struct SummarizerOptions {
  std::string model;
  PromptTemplate prompt;  // placeholders: {{report}}
  std::size_t chunk_chars = 6000;
  double temperature = 0.0;
  int max_tokens = 1024;
};

// Greedy packing of blank-line-separated paragraphs into chunks of at most
// `chunk_chars` bytes; a single oversized paragraph forms its own chunk.
std::vector<std::string> chunk_paragraphs(std::string_view body, std::size_t chunk_chars);

std::vector<LlmRequest> summary_requests(const CleanReport& report, const SummarizerOptions& options);

// Chunk summaries are concatenated in order and re-scrubbed.
SummarisedReport summarize_report(const CleanReport& report, LlmGateway& gateway, const SummarizerOptions& options,
                                  const ScrubOptions& scrub_options = ScrubOptions::defaults());

}  // namespace ttpx
