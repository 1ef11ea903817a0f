#include <iostream>

#include "optree/cli.hpp"

int main(int argc, char** argv) {
    return optree::cli_main(argc, argv, std::cout, std::cerr);
}
