#include <iostream>

#include "stpsm/cli/app.hpp"

int main(int argc, char** argv) { return stpsm::run_cli(argc, argv, std::cout, std::cerr); }
