#include <iostream>

#include "chartattrib/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return chartattrib::cli::run(args, std::cout, std::cerr);
}
