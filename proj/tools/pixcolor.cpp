#include <iostream>
#include <string>
#include <vector>

#include "pixcolor/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pixcolor::run_cli(args, std::cout, std::cerr);
}
