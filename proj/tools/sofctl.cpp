#include <iostream>

#include "sofctl/cli.hpp"

int main(int argc, char** argv) { return sofctl::cli::run(argc, argv, std::cout, std::cerr); }
