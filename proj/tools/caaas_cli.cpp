#include <iostream>

#include "caaas/cli.hpp"

int main(int argc, char** argv) { return caaas::run_cli(argc, argv, std::cout, std::cerr); }
