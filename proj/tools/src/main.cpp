#include <iostream>

#include "rqbench/cli/commands.hpp"

int main(int argc, char** argv) {
  return rqbench::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
