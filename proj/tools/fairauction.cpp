#include <iostream>

#include "fairauction/cli.hpp"

int main(int argc, char** argv) { return fairauction::run_cli(argc, argv, std::cout, std::cerr); }
