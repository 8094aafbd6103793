#include <iostream>
#include <string>
#include <vector>

#include "bibleqa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bqa::cli::dispatch(args, std::cout);
}
