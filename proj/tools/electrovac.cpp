// SPDX-License-Identifier: MIT

#include <electrovac/cli.hpp>

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return electrovac::cli::run(std::move(args), std::cout, std::cerr);
}
