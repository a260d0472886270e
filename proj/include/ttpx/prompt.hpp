#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace ttpx {

// Versioned prompt template. File layout:
//
//   name: zeroshot-v1
//   system: You are a cybersecurity analyst.
//   ---
//   user prompt text with {{placeholders}}
struct PromptTemplate {
  std::string name;
  std::string system;
  std::string user;

  // Substitutes every {{key}}; unknown or unused keys are usage errors.
  std::string render_user(const std::map<std::string, std::string>& values) const;
};

PromptTemplate parse_prompt_template(std::string_view content, std::string_view origin);
PromptTemplate load_prompt_template(const std::filesystem::path& path);

}  // namespace ttpx
