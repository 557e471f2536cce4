#include <iostream>

#include "capr/cli.hpp"

int main(int argc, char** argv) { return capr::cli::run(argc, argv, std::cout, std::cerr); }
