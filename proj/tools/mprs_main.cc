#include <iostream>
#include <string>
#include <vector>

#include "mprs/cli/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mprs::RunCli(args, std::cout, std::cerr);
}
