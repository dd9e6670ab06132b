#include "support.hpp"

#include <fstream>
#include <sstream>

namespace ctp::testing {

System load(const std::string &text) { return dsl::parse_or_throw(text); }

std::string read_corpus(const std::string &name) {
  std::ifstream in(std::string(CTP_CORPUS_DIR) + "/" + name);
  if (!in)
    throw Error("missing corpus file " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

System load_corpus(const std::string &name) { return load(read_corpus(name)); }

} // namespace ctp::testing
