#include "covfilt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return covfilt::run_cli(argc, argv, std::cout, std::cerr); }
