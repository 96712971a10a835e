#include "chiralfilm/io.hpp"

#include <iostream>

int main(int argc, char** argv) { return chiralfilm::cli_dispatch(argc, argv, std::cout, std::cerr); }
