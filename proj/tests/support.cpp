#include "support.hpp"

namespace ttpx::test {

TechniqueCatalog small_catalog() {
  std::vector<Technique> t;
  auto add = [&](std::string_view id, std::string name, std::optional<int> rank, std::vector<std::string> aliases = {}) {
    t.push_back(Technique{TechniqueId(id), std::move(name), rank, std::move(aliases)});
  };
  add("T1566", "Phishing", std::nullopt);
  add("T1566.001", "Spearphishing Attachment", 1, {"spear phishing attachment"});
  add("T1059", "Command and Scripting Interpreter", std::nullopt);
  add("T1059.003", "Windows Command Shell", 2);
  add("T1057", "Process Discovery", 3, {"process enumeration"});
  add("T1056.001", "Keylogging", 4);
  add("T1070.004", "File Deletion", 5);
  add("T1570", "Lateral Tool Transfer", 6);
  add("T1021.001", "Remote Desktop Protocol", 7, {"RDP"});
  add("T1105", "Ingress Tool Transfer", 8);
  add("T1113", "Screen Capture", 9);
  add("T1090", "Proxy", 10);
  return TechniqueCatalog(std::move(t), "test-v1");
}

}  // namespace ttpx::test
