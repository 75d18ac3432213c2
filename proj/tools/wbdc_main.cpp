#include <iostream>

#include "wbdc/cli.hpp"

int main(int argc, char** argv) { return wbdc::run_cli(argc, argv, std::cout, std::cerr); }
