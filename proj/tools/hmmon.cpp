#include <iostream>

#include "hmmon/cli.hpp"

int main(int argc, char** argv) { return hmmon::run_cli(argc, argv, std::cout, std::cerr); }
