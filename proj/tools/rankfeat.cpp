#include <iostream>
#include <string>
#include <vector>

#include "rankfeat/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rankfeat::cli::run(args, std::cout, std::cerr);
}
