#include "drme/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return drme::cli::run(argc, argv, std::cout, std::cerr); }
