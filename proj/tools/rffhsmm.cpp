#include "rffhsmm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return rffhsmm::run_cli(argc, argv, std::cout, std::cerr);
}
