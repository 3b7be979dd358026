#include <string>
#include <vector>

#include "hgkt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hgkt::cli::run_cli(args);
}
