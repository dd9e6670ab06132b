#include <iostream>

#include "ctp/cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctp::cli::run(args, std::cout, std::cerr);
}
