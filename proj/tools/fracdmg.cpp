#include <iostream>

#include "fracdmg/cli.hpp"

int main(int argc, char** argv) { return fracdmg::cli::run(argc, argv, std::cout, std::cerr); }
