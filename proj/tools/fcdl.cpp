#include <iostream>
#include <string>
#include <vector>

#include "fcdl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fcdl::run_cli(args, std::cout, std::cerr);
}
