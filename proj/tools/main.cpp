#include <string>
#include <vector>

#include "rawhdr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rawhdr::cli::run_main(args);
}
