#include <iostream>
#include <vector>

#include "agstab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return agstab::dispatch(args, std::cout, std::cerr);
}
