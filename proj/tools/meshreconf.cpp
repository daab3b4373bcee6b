#include <iostream>

#include "meshreconf/cli/cli.hpp"

int main(int argc, char** argv) {
  return meshreconf::cli::run(argc, argv, std::cout, std::cerr);
}
