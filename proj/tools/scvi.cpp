#include <iostream>

#include "scvi/cli.hpp"

int main(int argc, char** argv) { return scvi::cli::run(argc, argv, std::cout, std::cerr); }
