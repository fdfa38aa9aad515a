#include "blayer/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return blayer::run_cli(argc, argv, std::cout, std::cerr); }
