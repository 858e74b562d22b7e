#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return srtest::cli::run_cli(argc, argv, std::cout, std::cerr); }
