#include <iostream>
#include <string>
#include <vector>

#include "crisis/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return crisis::dispatch(args, std::cout, std::cerr);
}
