#include <iostream>

#include "flsched/cli.hpp"

int main(int argc, char** argv) { return flsched::run_cli(argc, argv, std::cout, std::cerr); }
