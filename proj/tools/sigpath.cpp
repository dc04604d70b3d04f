#include <iostream>
#include <string>
#include <vector>

#include "sigpath/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return sigpath::cli::run(args, std::cout, std::cerr);
}
