#include <iostream>

#include "relqm_cli/cli.hpp"

int main(int argc, char** argv) { return relqm::cli::run(argc, argv, std::cout, std::cerr); }
