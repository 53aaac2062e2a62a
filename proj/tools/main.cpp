#include <iostream>

#include "blinkflow/cli.hpp"

int main(int argc, char** argv) { return blinkflow::cli::run(argc, argv, std::cout, std::cerr); }
