#include <iostream>

#include "epigrid/io/cli.hpp"

int main(int argc, char** argv) { return epigrid::cli_dispatch(argc, argv, std::cout, std::cerr); }
