#include <string>
#include <vector>

#include "pcons/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcons::run_cli(args);
}
