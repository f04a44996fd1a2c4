#include <iostream>

#include "fslab/cli.hpp"

int main(int argc, char **argv) { return fslab::cli_main(argc, argv, std::cout, std::cerr); }
