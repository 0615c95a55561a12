#include <iostream>

#include "beliefnet/cli.hpp"

int main(int argc, char** argv) { return beliefnet::cli::run(argc, argv, std::cout, std::cerr); }
