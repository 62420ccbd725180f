#include <iostream>
#include <string>
#include <vector>

#include "wmtext/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return wmtext::cli::run(args, std::cout, std::cerr);
}
