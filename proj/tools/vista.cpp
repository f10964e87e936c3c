#include <iostream>
#include <string>
#include <vector>

#include "vista/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return vista::cli::run_cli(args, std::cout, std::cerr);
}
