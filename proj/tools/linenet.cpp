#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return linenet::cli::run(argc, argv, std::cout, std::cerr); }
