#include "compopt/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return compopt::run_cli(argc, argv, std::cout, std::cerr); }
