#include <iostream>

#include "ulab/cli.hpp"

int main(int argc, char** argv) { return ulab::cli::main(argc, argv, std::cout, std::cerr); }
