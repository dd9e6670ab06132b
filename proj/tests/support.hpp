#pragma once

#include <string>

#include "ctp/dsl.hpp"
#include "ctp/model.hpp"

namespace ctp::testing {

System load(const std::string &text);
std::string read_corpus(const std::string &name);
System load_corpus(const std::string &name);

} // namespace ctp::testing
