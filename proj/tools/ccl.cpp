#include <iostream>

#include "ccl/cli.hpp"

int main(int argc, char** argv) { return ccl::cli::run_cli(argc, argv, std::cout, std::cerr); }
