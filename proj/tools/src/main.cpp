#include <iostream>

#include "tanglesim/cli/commands.hpp"

int main(int argc, char** argv) { return tanglesim::cli::run_cli(argc, argv, std::cout, std::cerr); }
