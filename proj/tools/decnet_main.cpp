#include <iostream>

#include "decnet/cli.hpp"

int main(int argc, char** argv) {
  return decnet::run_cli(argc, argv, std::cout, std::cerr);
}
