#include <iostream>

#include "tumor3d1d/io/cli.hpp"

int main(int argc, char** argv) { return tumor3d1d::io::cli_main(argc, argv, std::cout, std::cerr); }
