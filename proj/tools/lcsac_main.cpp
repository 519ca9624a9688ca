#include <vector>

#include "lcsac/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lcsac::cli::run(args);
}
