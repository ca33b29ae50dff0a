#include <iostream>

#include "clr/cli.hpp"

int main(int argc, char** argv) {
  return clr::run_cli(argc, argv, std::cout, std::cerr);
}
