#include <string>
#include <vector>

#include "sublens/report.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sublens::run_cli(args);
}
