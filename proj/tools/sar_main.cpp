#include "sar/eval/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sar::run_cli(argc, argv, std::cout, std::cerr); }
