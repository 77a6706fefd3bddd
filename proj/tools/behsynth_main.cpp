#include <iostream>

#include "behsynth/cli.hpp"

int main(int argc, char** argv) { return behsynth::run_cli(argc, argv, std::cout, std::cerr); }
