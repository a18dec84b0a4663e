#include <iostream>

#include "hkbary/cli.hpp"

int main(int argc, char** argv) { return hkbary::cli::run(argc, argv, std::cout, std::cerr); }
