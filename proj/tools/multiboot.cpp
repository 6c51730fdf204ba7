#include <iostream>
#include <string>
#include <vector>

#include "multiboot/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return multiboot::cli::run_cli(args, std::cout, std::cerr);
}
