#include <iostream>

#include "sublin/cli.hpp"

int main(int argc, char** argv) {
    return sublin::cli::run_cli(argc, argv, std::cout, std::cerr);
}
