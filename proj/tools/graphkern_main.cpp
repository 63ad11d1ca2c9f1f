#include <iostream>
#include <string>
#include <vector>

#include "graphkern/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return graphkern::cli::run(args, std::cout, std::cerr);
}
