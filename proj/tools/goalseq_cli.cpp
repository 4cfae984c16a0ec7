#include "goalseq/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return goalseq::run_cli(argc, argv, std::cout, std::cerr); }
