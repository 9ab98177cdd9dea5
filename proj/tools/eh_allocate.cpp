#include <iostream>

#include "ehalloc/cli.hpp"

int main(int argc, char** argv) { return ehalloc::run_cli(argc, argv, std::cout, std::cerr); }
