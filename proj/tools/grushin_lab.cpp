#include <iostream>
#include <string>
#include <vector>

#include "grushin/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto r = grushin::cli::run(args);
  std::cout << r.out;
  std::cerr << r.err;
  return r.code;
}
