#include <iostream>

#include "fungate/cli/commands.hpp"

int main(int argc, char** argv) { return fungate::cli::run(argc, argv, std::cout, std::cerr); }
