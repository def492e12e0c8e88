#include <string>
#include <vector>

#include "evcomp/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return evcomp::cli::run(args);
}
