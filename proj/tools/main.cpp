#include <iostream>

#include "stochchain/cli.hpp"

int main(int argc, char** argv) { return stochchain::cli::run(argc, argv, std::cout, std::cerr); }
