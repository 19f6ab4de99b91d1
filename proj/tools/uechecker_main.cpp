#include <iostream>

#include "uechecker/cli/commands.hpp"

int main(int argc, char** argv) { return uechecker::cli::run_cli(argc, argv, std::cout, std::cerr); }
