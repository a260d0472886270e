#include "ttpx/prompt.hpp"

#include <set>

#include "ttpx/error.hpp"
#include "ttpx/io.hpp"

namespace ttpx {

std::string PromptTemplate::render_user(const std::map<std::string, std::string>& values) const {
  std::string out;
  std::set<std::string> used;
  std::size_t pos = 0;
  while (true) {
    const auto open = user.find("{{", pos);
    if (open == std::string::npos) {
      out.append(user, pos);
      break;
    }
    const auto close = user.find("}}", open + 2);
    if (close == std::string::npos) throw UsageError("prompt '" + name + "': unterminated placeholder");
    out.append(user, pos, open - pos);
    const std::string key = user.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it == values.end()) throw UsageError("prompt '" + name + "': no value for {{" + key + "}}");
    out += it->second;
    used.insert(key);
    pos = close + 2;
  }
  for (const auto& [key, value] : values) {
    if (!used.contains(key)) throw UsageError("prompt '" + name + "' has no {{" + key + "}} placeholder");
  }
  return out;
}

PromptTemplate parse_prompt_template(std::string_view content, std::string_view origin) {
  PromptTemplate tpl;
  std::size_t pos = 0;
  bool separated = false;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = io::trim(content.substr(pos, end - pos));
    pos = end + 1;
    if (line == "---") {
      separated = true;
      break;
    }
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw UsageError(std::string(origin) + ": malformed prompt header line");
    const auto key = io::trim(line.substr(0, colon));
    const auto value = io::trim(line.substr(colon + 1));
    if (key == "name") {
      tpl.name = value;
    } else if (key == "system") {
      tpl.system = value;
    } else {
      throw UsageError(std::string(origin) + ": unknown prompt header '" + std::string(key) + "'");
    }
  }
  if (!separated) throw UsageError(std::string(origin) + ": prompt template missing '---'");
  if (tpl.name.empty() || tpl.system.empty()) throw UsageError(std::string(origin) + ": prompt needs name and system");
  tpl.user = std::string(pos < content.size() ? content.substr(pos) : std::string_view{});
  while (!tpl.user.empty() && (tpl.user.back() == '\n' || tpl.user.back() == '\r')) tpl.user.pop_back();
  if (tpl.user.empty()) throw UsageError(std::string(origin) + ": prompt template has an empty user section");
  return tpl;
}

PromptTemplate load_prompt_template(const std::filesystem::path& path) {
  try {
    return parse_prompt_template(io::read_text_file(path), path.string());
  } catch (const DataError&) {
    throw UsageError("cannot read prompt template " + path.string());
  }
}

}  // namespace ttpx
