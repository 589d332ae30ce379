#include <iostream>
#include <string>
#include <vector>

#include "dpl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dpl::run_cli(args, std::cout, std::cerr);
}
