#include <iostream>

#include "bpghunt/cli.hpp"

int main(int argc, char** argv) { return bpghunt::run_cli(argc, argv, std::cout, std::cerr); }
