#include <iostream>

#include "fairbary/cli.hpp"

int main(int argc, char** argv) { return fairbary::cli::run(argc, argv, std::cerr); }
