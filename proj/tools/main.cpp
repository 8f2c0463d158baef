#include "mvtrack/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mvtrack::run_cli(argc, argv, std::cout, std::cerr); }
