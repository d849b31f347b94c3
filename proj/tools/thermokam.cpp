#include "thermokam/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return thermokam::cli::run_cli(argc, argv, std::cout, std::cerr); }
