#include <iostream>

#include "dpu/cli.hpp"

int main(int argc, char** argv) {
  return dpu::cli::run(argc, argv, std::cout, std::cerr);
}
