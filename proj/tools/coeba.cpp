#include "coeba/cli.hpp"

int main(int argc, char** argv) {
  return coeba::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
