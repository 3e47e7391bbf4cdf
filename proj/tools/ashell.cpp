#include <iostream>

#include "ashell/app.hpp"

int main(int argc, char** argv) { return ashell::run_cli(argc, argv, std::cout, std::cerr); }
