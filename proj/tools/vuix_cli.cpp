#include <iostream>

#include "vuix/cli.hpp"

int main(int argc, char** argv) {
  return vuix::cli::run(argc, argv, std::cout, std::cerr);
}
