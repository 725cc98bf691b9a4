#include <iostream>

#include "dynlattice/cli.hpp"

int main(int argc, char** argv) { return dynlattice::cli::run(argc, argv, std::cout, std::cerr); }
