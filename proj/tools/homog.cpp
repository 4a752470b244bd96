#include <string>
#include <vector>

#include "homog/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return homog::run_cli(std::move(args));
}
